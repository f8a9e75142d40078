#include <atomic>
#include <cstdlib>
#include <string>

#include "factedit/kernels.hpp"

namespace factedit::kernels {

#if !defined(FACTEDIT_BUILD_AVX2)
namespace avx2 {
const Table* table() { return nullptr; }
}  // namespace avx2
#endif

#if !defined(FACTEDIT_BUILD_NEON)
namespace neon {
const Table* table() { return nullptr; }
}  // namespace neon
#endif

namespace {

const Table* table_for(Isa isa) {
  switch (isa) {
    case Isa::Avx2:
      return avx2::table();
    case Isa::Neon:
      return neon::table();
    case Isa::Scalar:
      break;
  }
  return &scalar::table();
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(FACTEDIT_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(FACTEDIT_BUILD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect() {
  if (const char* forced = std::getenv("FACTEDIT_ISA"); forced != nullptr && std::string(forced) == "scalar") {
    return Isa::Scalar;
  }
  if (cpu_supports(Isa::Avx2)) return Isa::Avx2;
  if (cpu_supports(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

struct Active {
  std::atomic<const Table*> table;
  std::atomic<Isa> isa;
  Active() : table(table_for(detect())), isa(detect()) {}
};

Active& active() {
  static Active a;
  return a;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return cpu_supports(isa) && table_for(isa) != nullptr; }

Isa detected_isa() { return detect(); }

Isa active_isa() { return active().isa.load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) isa = Isa::Scalar;
  active().table.store(table_for(isa), std::memory_order_relaxed);
  active().isa.store(isa, std::memory_order_relaxed);
}

double sum(std::span<const double> x) { return active().table.load(std::memory_order_relaxed)->sum(x); }
double dot(std::span<const double> x, std::span<const double> y) {
  return active().table.load(std::memory_order_relaxed)->dot(x, y);
}
double max_value(std::span<const double> x) { return active().table.load(std::memory_order_relaxed)->max_value(x); }
double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  return active().table.load(std::memory_order_relaxed)->max_abs_diff(x, y);
}
double abs_diff_sum(std::span<const double> x, std::span<const double> y) {
  return active().table.load(std::memory_order_relaxed)->abs_diff_sum(x, y);
}
void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().table.load(std::memory_order_relaxed)->axpy(a, x, y);
}
void scale(std::span<double> x, double a) { active().table.load(std::memory_order_relaxed)->scale(x, a); }

}  // namespace factedit::kernels
