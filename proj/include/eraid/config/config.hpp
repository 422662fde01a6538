#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "eraid/convert/convert.hpp"
#include "eraid/iopath/array.hpp"
#include "eraid/scheduler/scheduler.hpp"

namespace eraid {

// Plain-text key=value array description. '#' starts a comment.
struct ArrayConfigFile {
  int devices = 4;
  std::uint64_t flash_bytes = 64ull << 20;
  double alpha_exp = 1.4;
  std::uint32_t strip_blocks = 1;
  double journal_fraction = 0.01;
  CompressMode mode = CompressMode::modeled;
  ParityPolicy parity_policy = ParityPolicy::linkage;
  std::size_t migration_workers = 4;
  // Scheduler thresholds in bytes per device; 0 picks 80 % / 92 % of flash.
  std::uint64_t c_lower = 0;
  std::uint64_t c_upper = 0;
  double h = 1.5;
  std::size_t batch_size = 16;
  bool proactive = true;
  bool autonomous = false;
  bool probabilistic = true;
  double throttle_mbps = 0.0;   // 0: unthrottled
  std::size_t conversion_workers = 8;
  std::uint64_t seed = 1;

  // Throws ConfigInvalid naming the offending key.
  void validate() const;
  ArrayConfig array_config() const;
  SchedulerConfig scheduler_config() const;
  ThrottleConfig throttle_config() const;
  std::string to_text() const;
};

// "4096", "64MiB", "1GiB", "2G", "512k". Binary multiples for every suffix.
std::uint64_t parse_size(std::string_view text);

ArrayConfigFile parse_config(std::string_view text);
ArrayConfigFile load_config(const std::filesystem::path& path);
void save_config(const ArrayConfigFile& cfg, const std::filesystem::path& path);

// The explicit path if given, else $ERAID_CONFIG, else nothing.
std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::filesystem::path>& explicit_path);

}  // namespace eraid
