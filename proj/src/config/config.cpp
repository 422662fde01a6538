#include "eraid/config/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eraid/error.hpp"

namespace eraid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  raise(Errc::config_invalid,
        std::string(key) + " = '" + std::string(value) + "': " + std::string(why));
}

double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used != v.size() || !std::isfinite(d)) bad(key, v, "not a number");
    return d;
  } catch (const std::logic_error&) {
    bad(key, v, "not a number");
  }
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad(key, v, "not a non-negative integer");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  const std::string l = lower(v);
  if (l == "1" || l == "true" || l == "yes" || l == "on") return true;
  if (l == "0" || l == "false" || l == "no" || l == "off") return false;
  bad(key, v, "expected true or false");
}

}  // namespace

std::uint64_t parse_size(std::string_view text) {
  const std::string_view t = trim(text);
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i == 0) raise(Errc::config_invalid, "size '" + std::string(text) + "' has no digits");
  std::uint64_t base = 0;
  std::from_chars(t.data(), t.data() + i, base);
  const std::string suffix = lower(trim(t.substr(i)));
  int shift = 0;
  if (suffix.empty() || suffix == "b") {
    shift = 0;
  } else if (suffix == "k" || suffix == "kb" || suffix == "kib") {
    shift = 10;
  } else if (suffix == "m" || suffix == "mb" || suffix == "mib") {
    shift = 20;
  } else if (suffix == "g" || suffix == "gb" || suffix == "gib") {
    shift = 30;
  } else if (suffix == "t" || suffix == "tb" || suffix == "tib") {
    shift = 40;
  } else {
    raise(Errc::config_invalid, "size '" + std::string(text) + "' has unknown suffix");
  }
  if (shift > 0 && base > (~0ull >> shift)) {
    raise(Errc::config_invalid, "size '" + std::string(text) + "' overflows");
  }
  return base << shift;
}

void ArrayConfigFile::validate() const {
  auto fail = [](const std::string& m) { raise(Errc::config_invalid, m); };
  if (devices < 3) fail("devices must be at least 3");
  if (flash_bytes < 64 * kBlockSize) fail("flash must be at least 256KiB");
  if (!(alpha_exp >= 1.0)) fail("alpha_exp must be >= 1");
  if (strip_blocks == 0) fail("strip_blocks must be positive");
  if (!(journal_fraction >= 0.0 && journal_fraction < 0.5)) {
    fail("journal_fraction must be in [0, 0.5)");
  }
  if (migration_workers == 0) fail("migration_workers must be positive");
  if (conversion_workers == 0) fail("conversion_workers must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(throttle_mbps >= 0.0)) fail("throttle_mbps must be >= 0");
  const SchedulerConfig sc = scheduler_config();
  if (!(sc.c_upper < flash_bytes)) {
    fail("c_upper (" + std::to_string(sc.c_upper) + ") must be below flash (" +
         std::to_string(flash_bytes) + ")");
  }
  if (!(sc.c_lower < sc.c_upper)) fail("c_lower must be below c_upper");
  if (!(h > 1.0)) fail("h must be greater than 1");
  if (static_cast<std::uint64_t>(std::floor(alpha_exp * static_cast<double>(flash_bytes) /
                                            static_cast<double>(strip_blocks * kBlockSize))) == 0) {
    fail("flash too small for one segment");
  }
}

ArrayConfig ArrayConfigFile::array_config() const {
  ArrayConfig c;
  c.geometry.devices = devices;
  c.geometry.flash_capacity_bytes = flash_bytes;
  c.geometry.alpha_exp = alpha_exp;
  c.geometry.strip_blocks = strip_blocks;
  c.journal_fraction = journal_fraction;
  c.mode = mode;
  c.parity_policy = parity_policy;
  c.migration_workers = migration_workers;
  return c;
}

SchedulerConfig ArrayConfigFile::scheduler_config() const {
  SchedulerConfig s = SchedulerConfig::defaults_for(flash_bytes);
  if (c_lower != 0) s.c_lower = c_lower;
  if (c_upper != 0) s.c_upper = c_upper;
  s.h = h;
  s.batch_size = batch_size;
  s.proactive = proactive;
  s.autonomous = autonomous;
  s.probabilistic = probabilistic;
  s.seed = seed;
  return s;
}

ThrottleConfig ArrayConfigFile::throttle_config() const {
  ThrottleConfig t;
  t.max_bytes_per_sec = throttle_mbps * 1e6;
  t.worker_count = conversion_workers;
  return t;
}

std::string ArrayConfigFile::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "devices = " << devices << '\n'
     << "flash = " << flash_bytes << '\n'
     << "alpha_exp = " << alpha_exp << '\n'
     << "strip_blocks = " << strip_blocks << '\n'
     << "journal_fraction = " << journal_fraction << '\n'
     << "mode = " << (mode == CompressMode::real ? "real" : "modeled") << '\n'
     << "parity_policy = " << parity_policy_name(parity_policy) << '\n'
     << "migration_workers = " << migration_workers << '\n'
     << "c_lower = " << c_lower << '\n'
     << "c_upper = " << c_upper << '\n'
     << "h = " << h << '\n'
     << "batch_size = " << batch_size << '\n'
     << "proactive = " << (proactive ? "true" : "false") << '\n'
     << "autonomous = " << (autonomous ? "true" : "false") << '\n'
     << "probabilistic = " << (probabilistic ? "true" : "false") << '\n'
     << "throttle_mbps = " << throttle_mbps << '\n'
     << "conversion_workers = " << conversion_workers << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

ArrayConfigFile parse_config(std::string_view text) {
  ArrayConfigFile c;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      raise(Errc::config_invalid, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string_view v = trim(line.substr(eq + 1));
    if (key == "devices") {
      c.devices = static_cast<int>(parse_uint(key, v));
    } else if (key == "flash" || key == "flash_bytes") {
      c.flash_bytes = parse_size(v);
    } else if (key == "alpha_exp") {
      c.alpha_exp = parse_double(key, v);
    } else if (key == "strip_blocks") {
      c.strip_blocks = static_cast<std::uint32_t>(parse_uint(key, v));
    } else if (key == "journal_fraction") {
      c.journal_fraction = parse_double(key, v);
    } else if (key == "mode") {
      const std::string m = lower(v);
      if (m == "real") {
        c.mode = CompressMode::real;
      } else if (m == "modeled") {
        c.mode = CompressMode::modeled;
      } else {
        bad(key, v, "expected real or modeled");
      }
    } else if (key == "parity_policy") {
      c.parity_policy = parity_policy_from(v);
    } else if (key == "migration_workers") {
      c.migration_workers = parse_uint(key, v);
    } else if (key == "c_lower") {
      c.c_lower = parse_size(v);
    } else if (key == "c_upper") {
      c.c_upper = parse_size(v);
    } else if (key == "h") {
      c.h = parse_double(key, v);
    } else if (key == "batch_size") {
      c.batch_size = parse_uint(key, v);
    } else if (key == "proactive") {
      c.proactive = parse_bool(key, v);
    } else if (key == "autonomous") {
      c.autonomous = parse_bool(key, v);
    } else if (key == "probabilistic") {
      c.probabilistic = parse_bool(key, v);
    } else if (key == "throttle_mbps") {
      c.throttle_mbps = parse_double(key, v);
    } else if (key == "conversion_workers") {
      c.conversion_workers = parse_uint(key, v);
    } else if (key == "seed") {
      c.seed = parse_uint(key, v);
    } else {
      raise(Errc::config_invalid, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ArrayConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) raise(Errc::config_invalid, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void save_config(const ArrayConfigFile& cfg, const std::filesystem::path& path) {
  std::ofstream os(path);
  os << cfg.to_text();
  if (!os) raise(Errc::config_invalid, "cannot write config " + path.string());
}

std::optional<std::filesystem::path> resolve_config_path(
    const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return explicit_path;
  if (const char* env = std::getenv("ERAID_CONFIG"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return std::nullopt;
}

}  // namespace eraid
