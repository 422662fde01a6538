#if defined(__aarch64__)
#include <arm_neon.h>

#include "eraid/simd/xor_kernels.hpp"

namespace eraid::simd::detail {

void xor_into_neon(std::uint8_t* dst, const std::uint8_t* src, std::size_t len) {
  std::size_t i = 0;
  for (; i + 16 <= len; i += 16) {
    vst1q_u8(dst + i, veorq_u8(vld1q_u8(dst + i), vld1q_u8(src + i)));
  }
  if (i < len) xor_into_scalar(dst + i, src + i, len - i);
}

void xor_pair_neon(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len) {
  std::size_t i = 0;
  for (; i + 16 <= len; i += 16) {
    vst1q_u8(dst + i, veorq_u8(vld1q_u8(a + i), vld1q_u8(b + i)));
  }
  if (i < len) xor_pair_scalar(dst + i, a + i, b + i, len - i);
}

bool all_zero_neon(const std::uint8_t* p, std::size_t len) {
  std::size_t i = 0;
  uint8x16_t acc = vdupq_n_u8(0);
  for (; i + 16 <= len; i += 16) acc = vorrq_u8(acc, vld1q_u8(p + i));
  return vmaxvq_u8(acc) == 0 && (i == len || all_zero_scalar(p + i, len - i));
}

}  // namespace eraid::simd::detail
#endif
