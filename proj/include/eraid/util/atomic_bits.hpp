#pragma once

#include <atomic>
#include <cstdint>
#include <memory>

namespace eraid {

// Fixed-size bit vector with lock-free set/clear/test.
class AtomicBits {
 public:
  explicit AtomicBits(std::uint64_t bits)
      : bits_(bits), words_(std::make_unique<std::atomic<std::uint64_t>[]>((bits + 63) / 64 + 1)) {
    clear_all();
  }

  std::uint64_t size() const { return bits_; }
  bool test(std::uint64_t i) const {
    return ((words_[i / 64].load(std::memory_order_relaxed) >> (i % 64)) & 1) != 0;
  }
  void set(std::uint64_t i) {
    words_[i / 64].fetch_or(std::uint64_t{1} << (i % 64), std::memory_order_relaxed);
  }
  void clear(std::uint64_t i) {
    words_[i / 64].fetch_and(~(std::uint64_t{1} << (i % 64)), std::memory_order_relaxed);
  }
  void clear_all() {
    for (std::uint64_t w = 0; w < (bits_ + 63) / 64 + 1; ++w) words_[w].store(0);
  }
  std::uint64_t count() const {
    std::uint64_t c = 0;
    for (std::uint64_t w = 0; w < (bits_ + 63) / 64; ++w) {
      c += static_cast<std::uint64_t>(__builtin_popcountll(words_[w].load()));
    }
    return c;
  }

 private:
  std::uint64_t bits_;
  std::unique_ptr<std::atomic<std::uint64_t>[]> words_;
};

}  // namespace eraid
