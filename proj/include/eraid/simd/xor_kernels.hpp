#pragma once

// XOR/zero-test kernels used for RAID-5 parity. One scalar reference kernel
// plus vector variants; the widest one the CPU supports is picked on first use.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace eraid::simd {

enum class Isa { scalar, sse2, avx2, neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // dst[i] ^= src[i]
  void (*xor_into)(std::uint8_t* dst, const std::uint8_t* src, std::size_t len);
  // dst[i] = a[i] ^ b[i]
  void (*xor_pair)(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len);
  bool (*all_zero)(const std::uint8_t* p, std::size_t len);
};

// Kernels compiled into this binary and runnable on this CPU.
std::vector<Isa> available_isas();
const KernelTable& kernels_for(Isa isa);

const KernelTable& active();
// Test hook; also honoured through ERAID_SIMD=scalar|sse2|avx2|neon at startup.
void force_isa(Isa isa);

inline void xor_into(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src) {
  active().xor_into(dst.data(), src.data(), dst.size() < src.size() ? dst.size() : src.size());
}

inline void xor_pair(std::span<std::uint8_t> dst, std::span<const std::uint8_t> a,
                     std::span<const std::uint8_t> b) {
  active().xor_pair(dst.data(), a.data(), b.data(), dst.size());
}

inline bool all_zero(std::span<const std::uint8_t> p) {
  return active().all_zero(p.data(), p.size());
}

namespace detail {
void xor_into_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t len);
void xor_pair_scalar(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                     std::size_t len);
bool all_zero_scalar(const std::uint8_t* p, std::size_t len);

#if defined(__x86_64__) || defined(_M_X64)
void xor_into_sse2(std::uint8_t* dst, const std::uint8_t* src, std::size_t len);
void xor_pair_sse2(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len);
bool all_zero_sse2(const std::uint8_t* p, std::size_t len);
void xor_into_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t len);
void xor_pair_avx2(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len);
bool all_zero_avx2(const std::uint8_t* p, std::size_t len);
#endif

#if defined(__aarch64__)
void xor_into_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t len);
void xor_pair_neon(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len);
bool all_zero_neon(const std::uint8_t* p, std::size_t len);
#endif
}  // namespace detail

}  // namespace eraid::simd
