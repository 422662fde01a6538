#include <emmintrin.h>

#include "eraid/simd/xor_kernels.hpp"

namespace eraid::simd::detail {

void xor_into_sse2(std::uint8_t* dst, const std::uint8_t* src, std::size_t len) {
  std::size_t i = 0;
  for (; i + 64 <= len; i += 64) {
    for (std::size_t k = 0; k < 64; k += 16) {
      __m128i a = _mm_loadu_si128(reinterpret_cast<const __m128i*>(dst + i + k));
      __m128i b = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src + i + k));
      _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + i + k), _mm_xor_si128(a, b));
    }
  }
  for (; i + 16 <= len; i += 16) {
    __m128i a = _mm_loadu_si128(reinterpret_cast<const __m128i*>(dst + i));
    __m128i b = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src + i));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + i), _mm_xor_si128(a, b));
  }
  if (i < len) xor_into_scalar(dst + i, src + i, len - i);
}

void xor_pair_sse2(std::uint8_t* dst, const std::uint8_t* a, const std::uint8_t* b,
                   std::size_t len) {
  std::size_t i = 0;
  for (; i + 16 <= len; i += 16) {
    __m128i x = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i));
    __m128i y = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(dst + i), _mm_xor_si128(x, y));
  }
  if (i < len) xor_pair_scalar(dst + i, a + i, b + i, len - i);
}

bool all_zero_sse2(const std::uint8_t* p, std::size_t len) {
  std::size_t i = 0;
  __m128i acc = _mm_setzero_si128();
  for (; i + 16 <= len; i += 16) {
    acc = _mm_or_si128(acc, _mm_loadu_si128(reinterpret_cast<const __m128i*>(p + i)));
  }
  const bool vec_zero =
      _mm_movemask_epi8(_mm_cmpeq_epi8(acc, _mm_setzero_si128())) == 0xFFFF;
  return vec_zero && (i == len || all_zero_scalar(p + i, len - i));
}

}  // namespace eraid::simd::detail
