#include "factedit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace factedit::kernels::scalar {
namespace {

double sum_impl(std::span<const double> x) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = x.size();
  for (; i + 4 <= n; i += 4) {
    lane[0] += x[i];
    lane[1] += x[i + 1];
    lane[2] += x[i + 2];
    lane[3] += x[i + 3];
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) total += x[i];
  return total;
}

double dot_impl(std::span<const double> x, std::span<const double> y) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = std::min(x.size(), y.size());
  for (; i + 4 <= n; i += 4) {
    lane[0] += x[i] * y[i];
    lane[1] += x[i + 1] * y[i + 1];
    lane[2] += x[i + 2] * y[i + 2];
    lane[3] += x[i + 3] * y[i + 3];
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double max_value_impl(std::span<const double> x) {
  double best = -std::numeric_limits<double>::infinity();
  for (double v : x) best = std::max(best, v);
  return best;
}

double max_abs_diff_impl(std::span<const double> x, std::span<const double> y) {
  double best = 0.0;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::fabs(x[i] - y[i]));
  return best;
}

double abs_diff_sum_impl(std::span<const double> x, std::span<const double> y) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  const std::size_t n = std::min(x.size(), y.size());
  for (; i + 4 <= n; i += 4) {
    lane[0] += std::fabs(x[i] - y[i]);
    lane[1] += std::fabs(x[i + 1] - y[i + 1]);
    lane[2] += std::fabs(x[i + 2] - y[i + 2]);
    lane[3] += std::fabs(x[i + 3] - y[i + 3]);
  }
  double total = (lane[0] + lane[1]) + (lane[2] + lane[3]);
  for (; i < n; ++i) total += std::fabs(x[i] - y[i]);
  return total;
}

void axpy_impl(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_impl(std::span<double> x, double a) {
  for (double& v : x) v *= a;
}

}  // namespace

const Table& table() {
  static const Table t{sum_impl,          dot_impl,  max_value_impl, max_abs_diff_impl,
                       abs_diff_sum_impl, axpy_impl, scale_impl};
  return t;
}

}  // namespace factedit::kernels::scalar
