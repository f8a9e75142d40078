#include "factedit/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace factedit::kernels::avx2 {
namespace {

inline double combine(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

double sum_impl(std::span<const double> x) {
  const double* p = x.data();
  const std::size_t n = x.size();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
  double total = combine(acc);
  for (; i < n; ++i) total += p[i];
  return total;
}

double dot_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    acc = _mm256_add_pd(acc, prod);
  }
  double total = combine(acc);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double max_value_impl(std::span<const double> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  double best = -std::numeric_limits<double>::infinity();
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x.data());
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x.data() + i));
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    best = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
  }
  for (; i < n; ++i) best = std::max(best, x[i]);
  return best;
}

double max_abs_diff_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    acc = _mm256_max_pd(acc, abs_pd(d));
  }
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double best = std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
  for (; i < n; ++i) best = std::max(best, std::fabs(x[i] - y[i]));
  return best;
}

double abs_diff_sum_impl(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), _mm256_loadu_pd(y.data() + i));
    acc = _mm256_add_pd(acc, abs_pd(d));
  }
  double total = combine(acc);
  for (; i < n; ++i) total += std::fabs(x[i] - y[i]);
  return total;
}

void axpy_impl(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i));
    _mm256_storeu_pd(y.data() + i, _mm256_add_pd(_mm256_loadu_pd(y.data() + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale_impl(std::span<double> x, double a) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  const std::size_t n = x.size();
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i), va));
  for (; i < n; ++i) x[i] *= a;
}

}  // namespace

const Table* table() {
  static const Table t{sum_impl,          dot_impl,  max_value_impl, max_abs_diff_impl,
                       abs_diff_sum_impl, axpy_impl, scale_impl};
  return &t;
}

}  // namespace factedit::kernels::avx2
