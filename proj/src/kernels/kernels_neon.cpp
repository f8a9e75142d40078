#include "factedit/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>
#include <limits>

// Two float64x2 registers hold the four reduction lanes: lo = {l0, l1},
// hi = {l2, l3}, matching the scalar reference order.

namespace factedit::kernels::neon {
namespace {

inline double combine(float64x2_t lo, float64x2_t hi) {
  return (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
         (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
}

double sum_impl(std::span<const double> x) {
  const double* p = x.data();
  const std::size_t n = x.size();
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vld1q_f64(p + i));
    hi = vaddq_f64(hi, vld1q_f64(p + i + 2));
  }
  double total = combine(lo, hi);
  for (; i < n; ++i) total += p[i];
  return total;
}

double dot_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(x.data() + i), vld1q_f64(y.data() + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(x.data() + i + 2), vld1q_f64(y.data() + i + 2)));
  }
  double total = combine(lo, hi);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double max_value_impl(std::span<const double> x) {
  double best = -std::numeric_limits<double>::infinity();
  const std::size_t n = x.size();
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t acc = vld1q_f64(x.data());
    for (i = 2; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vld1q_f64(x.data() + i));
    best = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  }
  for (; i < n; ++i) best = std::max(best, x[i]);
  return best;
}

double max_abs_diff_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vmaxq_f64(acc, vabdq_f64(vld1q_f64(x.data() + i), vld1q_f64(y.data() + i)));
  }
  double best = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  for (; i < n; ++i) best = std::max(best, std::fabs(x[i] - y[i]));
  return best;
}

double abs_diff_sum_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  float64x2_t lo = vdupq_n_f64(0.0), hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vabdq_f64(vld1q_f64(x.data() + i), vld1q_f64(y.data() + i)));
    hi = vaddq_f64(hi, vabdq_f64(vld1q_f64(x.data() + i + 2), vld1q_f64(y.data() + i + 2)));
  }
  double total = combine(lo, hi);
  for (; i < n; ++i) total += std::fabs(x[i] - y[i]);
  return total;
}

void axpy_impl(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y.data() + i, vaddq_f64(vld1q_f64(y.data() + i), vmulq_f64(va, vld1q_f64(x.data() + i))));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_impl(std::span<double> x, double a) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= x.size(); i += 2) vst1q_f64(x.data() + i, vmulq_f64(vld1q_f64(x.data() + i), va));
  for (; i < x.size(); ++i) x[i] *= a;
}

}  // namespace

const Table* table() {
  static const Table t{sum_impl,          dot_impl,  max_value_impl, max_abs_diff_impl,
                       abs_diff_sum_impl, axpy_impl, scale_impl};
  return &t;
}

}  // namespace factedit::kernels::neon
