#include <atomic>
#include <cstdlib>
#include <string>

#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid::simd {

namespace {

constexpr KernelTable kScalar{Isa::scalar, detail::xor_into_scalar, detail::xor_pair_scalar,
                              detail::all_zero_scalar};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable kSse2{Isa::sse2, detail::xor_into_sse2, detail::xor_pair_sse2,
                            detail::all_zero_sse2};
constexpr KernelTable kAvx2{Isa::avx2, detail::xor_into_avx2, detail::xor_pair_avx2,
                            detail::all_zero_avx2};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{Isa::neon, detail::xor_into_neon, detail::xor_pair_neon,
                            detail::all_zero_neon};
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::sse2: return true;  // x86-64 baseline
    case Isa::avx2: return __builtin_cpu_supports("avx2");
#endif
#if defined(__aarch64__)
    case Isa::neon: return true;
#endif
    default: return false;
  }
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("ERAID_SIMD")) {
    const std::string want(env);
    for (Isa isa : available_isas()) {
      if (isa_name(isa) == want) return &kernels_for(isa);
    }
  }
  const auto isas = available_isas();
  return &kernels_for(isas.back());
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::sse2: return "sse2";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::sse2, Isa::avx2, Isa::neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!cpu_supports(isa)) {
    raise(Errc::invalid_argument, "kernel set not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
    case Isa::sse2: return kSse2;
    case Isa::avx2: return kAvx2;
#endif
#if defined(__aarch64__)
    case Isa::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    t = pick_default();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void force_isa(Isa isa) { g_active.store(&kernels_for(isa), std::memory_order_release); }

}  // namespace eraid::simd
