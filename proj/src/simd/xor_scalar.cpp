#include <cstring>

#include "eraid/simd/xor_kernels.hpp"

namespace eraid::simd::detail {

// Word-at-a-time reference kernels. memcpy keeps unaligned access defined.

void xor_into_scalar(std::uint8_t* dst, const std::uint8_t* src, std::size_t len) {
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    std::uint64_t a, b;
    std::memcpy(&a, dst + i, 8);
    std::memcpy(&b, src + i, 8);
    a ^= b;
    std::memcpy(dst + i, &a, 8);
  }
  for (; i < len; ++i) dst[i] ^= src[i];
}

void xor_pair_scalar(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                     std::size_t len) {
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    std::uint64_t x, y;
    std::memcpy(&x, a + i, 8);
    std::memcpy(&y, b + i, 8);
    x ^= y;
    std::memcpy(dst + i, &x, 8);
  }
  for (; i < len; ++i) dst[i] = a[i] ^ b[i];
}

bool all_zero_scalar(const std::uint8_t* p, std::size_t len) {
  std::size_t i = 0;
  std::uint64_t acc = 0;
  for (; i + 8 <= len; i += 8) {
    std::uint64_t w;
    std::memcpy(&w, p + i, 8);
    acc |= w;
  }
  for (; i < len; ++i) acc |= p[i];
  return acc == 0;
}

}  // namespace eraid::simd::detail
