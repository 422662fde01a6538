#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace eraid {

inline constexpr std::size_t kBlockSize = 4096;

using Block = std::array<std::uint8_t, kBlockSize>;
using BlockSpan = std::span<std::uint8_t, kBlockSize>;
using ConstBlockSpan = std::span<const std::uint8_t, kBlockSize>;

enum class Level : std::uint8_t { r5 = 0, r10 = 1 };

constexpr std::string_view level_name(Level l) {
  return l == Level::r5 ? "R5" : "R10";
}

// Traffic classes tagged on every device operation. Write/read amplification
// only counts the foreground classes (user_read, user_write, journal).
enum class IoClass : std::uint8_t {
  user_read = 0,
  user_write,
  journal,
  background,
  maintenance,
};
inline constexpr std::size_t kIoClassCount = 5;

constexpr std::string_view io_class_name(IoClass c) {
  switch (c) {
    case IoClass::user_read: return "user_read";
    case IoClass::user_write: return "user_write";
    case IoClass::journal: return "journal";
    case IoClass::background: return "background";
    case IoClass::maintenance: return "maintenance";
  }
  return "?";
}

inline Block zero_block() { return Block{}; }

}  // namespace eraid
