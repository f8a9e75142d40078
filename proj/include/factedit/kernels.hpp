#pragma once

// Dense reductions used by the distributions and the exact-kernel harness.
//
// Every routine has a scalar reference in `kernels::scalar` and, where the
// target supports it, a vector variant. The public entry points dispatch at
// runtime. Reductions run in four interleaved lanes combined as
// ((l0 + l1) + (l2 + l3)) followed by the tail, and no routine contracts a
// multiply-add, so all variants return bit-identical results.

#include <cstddef>
#include <span>
#include <string_view>

namespace factedit::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

// Best variant the running CPU supports (honours FACTEDIT_ISA=scalar).
Isa detected_isa();
Isa active_isa();
// Test hook; falls back to Scalar when `isa` is unavailable.
void set_active_isa(Isa isa);
bool isa_available(Isa isa);

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double max_value(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
double abs_diff_sum(std::span<const double> x, std::span<const double> y);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double a);

struct Table {
  double (*sum)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*max_value)(std::span<const double>);
  double (*max_abs_diff)(std::span<const double>, std::span<const double>);
  double (*abs_diff_sum)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
  void (*scale)(std::span<double>, double);
};

namespace scalar {
const Table& table();
}
namespace avx2 {
// nullptr when the build has no AVX2 variant.
const Table* table();
}
namespace neon {
const Table* table();
}

}  // namespace factedit::kernels
