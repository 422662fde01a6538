// eraid: command-line front end for the elastic RAID engine and its harness.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eraid/bench/bench.hpp"
#include "eraid/config/config.hpp"
#include "eraid/convert/convert.hpp"
#include "eraid/datagen/datagen.hpp"
#include "eraid/error.hpp"
#include "eraid/model/model.hpp"
#include "eraid/scheduler/scheduler.hpp"

namespace fs = std::filesystem;
using namespace eraid;

namespace {

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::config_invalid:
    case Errc::invalid_argument:
    case Errc::out_of_range:
    case Errc::corpus_too_small:
    case Errc::unreachable_ratio:
      return 2;
    case Errc::out_of_space:
    case Errc::device_offline:
    case Errc::data_loss:
    case Errc::corrupt_image:
    case Errc::degraded_reject:
    case Errc::journal_full:
      return 3;
    case Errc::infeasible:
      return 4;
    default:
      return 1;
  }
}

// Array geometry flags shared by every command that may build a fresh array.
struct GeometryFlags {
  std::optional<int> devices;
  std::optional<std::string> flash;
  std::optional<double> alpha_exp;
  std::optional<std::uint32_t> strip_blocks;
  std::optional<double> journal_fraction;
  std::optional<std::string> mode;
  std::optional<std::string> parity_policy;

  void add_to(CLI::App* app) {
    app->add_option("--devices", devices, "Device count (n + 1)");
    app->add_option("--flash", flash, "Physical flash per device, e.g. 1GiB");
    app->add_option("--alpha-exp", alpha_exp, "Logical expansion factor");
    app->add_option("--strip-blocks", strip_blocks, "4 KiB blocks per strip");
    app->add_option("--journal-fraction", journal_fraction, "Journal share of device space");
    app->add_option("--mode", mode, "Compression: modeled or real");
    app->add_option("--parity-policy", parity_policy, "linkage, incompressible or same");
  }

  void apply(ArrayConfigFile& c) const {
    if (devices) c.devices = *devices;
    if (flash) c.flash_bytes = parse_size(*flash);
    if (alpha_exp) c.alpha_exp = *alpha_exp;
    if (strip_blocks) c.strip_blocks = *strip_blocks;
    if (journal_fraction) c.journal_fraction = *journal_fraction;
    if (mode) {
      if (*mode != "real" && *mode != "modeled") {
        raise(Errc::config_invalid, "--mode expects real or modeled, got " + *mode);
      }
      c.mode = *mode == "real" ? CompressMode::real : CompressMode::modeled;
    }
    if (parity_policy) c.parity_policy = parity_policy_from(*parity_policy);
  }
};

struct Globals {
  std::optional<std::string> config;
  std::optional<std::string> persist;
  std::optional<std::uint64_t> seed;
};

ArrayConfigFile base_config(const Globals& g) {
  ArrayConfigFile c;
  std::optional<fs::path> explicit_path;
  if (g.config) explicit_path = fs::path(*g.config);
  if (auto p = resolve_config_path(explicit_path)) c = load_config(*p);
  if (g.seed) c.seed = *g.seed;
  return c;
}

fs::path device_image(const fs::path& dir, std::size_t i) {
  return dir / ("dev" + std::to_string(i) + ".img");
}

struct Session {
  ArrayConfigFile cfg;
  std::unique_ptr<ElasticArray> array;
  std::optional<fs::path> dir;

  void save() const {
    if (!dir) return;
    fs::create_directories(*dir);
    save_config(cfg, *dir / "array.conf");
    for (std::size_t i = 0; i < array->devices().size(); ++i) {
      array->devices()[i]->save_image(device_image(*dir, i));
    }
  }
};

bool persisted_array_exists(const Globals& g) {
  return g.persist && fs::exists(fs::path(*g.persist) / "array.conf");
}

// Opens the persisted array (running recovery) or builds a fresh one.
Session open_session(const Globals& g, const GeometryFlags* flags, bool require_existing) {
  Session s;
  if (g.persist) s.dir = fs::path(*g.persist);
  if (persisted_array_exists(g)) {
    s.cfg = load_config(*s.dir / "array.conf");
    if (g.seed) s.cfg.seed = *g.seed;
    std::vector<DevicePtr> devs;
    for (int i = 0; i < s.cfg.devices; ++i) {
      devs.push_back(CompressingDevice::load_image(device_image(*s.dir, i)));
    }
    s.array = ElasticArray::open(s.cfg.array_config(), std::move(devs));
    return s;
  }
  if (require_existing) {
    raise(Errc::config_invalid, g.persist ? "no array in " + *g.persist + " (run mkraid first)"
                                          : std::string("this command needs --persist DIR"));
  }
  s.cfg = base_config(g);
  if (flags) flags->apply(s.cfg);
  s.cfg.validate();
  const ArrayConfig ac = s.cfg.array_config();
  s.array = ElasticArray::create(ac, ElasticArray::make_devices_for(ac));
  return s;
}

void emit(const std::optional<std::string>& path, const std::string& text) {
  if (!path || *path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream os(*path);
  os << text;
  if (!os) raise(Errc::invalid_argument, "cannot write " + *path);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) raise(Errc::invalid_argument, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::pair<double, double> parse_rw(const std::string& rw) {
  const auto colon = rw.find(':');
  if (colon == std::string::npos) raise(Errc::config_invalid, "--rw expects R:W, got " + rw);
  const double r = std::stod(rw.substr(0, colon));
  const double w = std::stod(rw.substr(colon + 1));
  if (r < 0 || w < 0 || r + w <= 0) raise(Errc::config_invalid, "--rw weights must be >= 0");
  return {r, w};
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  // lo:hi:count expands to an even grid, anything else is a comma list
  if (std::count(s.begin(), s.end(), ':') == 2) {
    const auto a = s.find(':');
    const auto b = s.find(':', a + 1);
    return linspace(std::stod(s.substr(0, a)), std::stod(s.substr(a + 1, b - a - 1)),
                    static_cast<std::size_t>(std::stoul(s.substr(b + 1))));
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

void pin_level(ElasticArray& a, Level level) {
  for (std::uint64_t s = 0; s < a.geometry().segment_count(); ++s) {
    if (a.level(s) == level) continue;
    if (level == Level::r10) {
      promote_segment(a, s);
    } else {
      demote_segment(a, s);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic RAID 5/10 engine over simulated compressing SSDs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "key=value array config (default: $ERAID_CONFIG)");
  app.add_option("--persist", g.persist, "Directory holding array.conf and device images");
  app.add_option("--seed", g.seed, "Seed for every randomized step");

  // mkraid
  auto* mk = app.add_subcommand("mkraid", "Create an array");
  GeometryFlags mk_flags;
  mk_flags.add_to(mk);
  std::optional<std::string> mk_out;
  mk->add_option("--out", mk_out, "Write the JSON summary here");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a workload and report amplification");
  GeometryFlags bench_flags;
  bench_flags.add_to(bench);
  std::uint64_t ops = 100000;
  std::string rw = "0:100";
  std::string dist = "uniform";
  double ratio = 1.0;
  double span = 1.0;
  std::optional<std::string> report_path;
  std::optional<std::string> events_path;
  std::optional<std::string> bench_level;
  std::optional<int> bench_degrade;
  std::size_t submitters = 1;
  std::uint64_t tick_every = 0;
  std::uint64_t sample_every = 0;
  bench->add_option("--ops", ops, "Operation count");
  bench->add_option("--rw", rw, "Read:write mix, e.g. 70:30");
  bench->add_option("--dist", dist, "uniform or 8020")->check(CLI::IsMember({"uniform", "8020"}));
  bench->add_option("--ratio", ratio, "Target compression ratio of written data");
  bench->add_option("--span", span, "Fraction of the user LBA space addressed");
  bench->add_option("--report", report_path, "Write the JSON report here");
  bench->add_option("--events", events_path, "Write the event log (JSON lines) here");
  bench->add_option("--level", bench_level, "Convert every segment to r5 or r10 first")
      ->check(CLI::IsMember({"r5", "r10"}));
  bench->add_option("--degrade", bench_degrade, "Fail this device before running");
  bench->add_option("--submitters", submitters, "Concurrent submitting threads");
  bench->add_option("--tick-every", tick_every, "Run the scheduler every N ops (0: off)");
  bench->add_option("--sample-every", sample_every, "Report sample interval in ops");

  // regen
  auto* regen = app.add_subcommand("report", "Rebuild a bench report from its event log");
  std::string regen_in;
  std::optional<std::string> regen_out;
  regen->add_option("--events", regen_in, "Event log written by bench --events")->required();
  regen->add_option("--out", regen_out, "Write the JSON report here");

  // convert
  auto* conv = app.add_subcommand("convert", "Promote or demote segments under a throttle");
  std::optional<std::string> promote_arg;
  std::optional<std::string> demote_arg;
  std::optional<double> throttle;
  std::optional<std::size_t> conv_workers;
  bool show_progress = false;
  std::optional<std::string> conv_out;
  conv->add_option("--promote", promote_arg, "'all' or a count of R5 segments");
  conv->add_option("--demote", demote_arg, "'all' or a count of R10 segments");
  conv->add_option("--throttle-mbps", throttle, "Cap in MB/s (10^6 bytes), 0: none");
  conv->add_option("--workers", conv_workers, "Conversion workers");
  conv->add_flag("--progress", show_progress, "Print one JSON line per finished task");
  conv->add_option("--out", conv_out, "Write the JSON report here");

  // degrade
  auto* deg = app.add_subcommand("degrade", "Take a device offline or restore it");
  int deg_device = -1;
  bool restore = false;
  deg->add_option("--device", deg_device, "Device id")->required();
  deg->add_flag("--restore", restore, "Bring the device back and rebuild it");

  auto* scrub = app.add_subcommand("scrub", "Check parity and mirror consistency");
  auto* stats = app.add_subcommand("stats", "Print array statistics as JSON");
  std::optional<std::string> stats_out;
  stats->add_option("--out", stats_out, "Write the JSON here");

  // model-sweep
  auto* sweep_cmd = app.add_subcommand("model-sweep", "RAID-10 coverage model as CSV");
  bool fig7 = false;
  bool fig8 = false;
  std::size_t points = 41;
  std::optional<std::string> sw_n, sw_aexp, sw_beta, sw_ausr, sw_apty, sw_out;
  sweep_cmd->add_flag("--fig7", fig7, "n {3,5}, alpha_exp 1.0..1.8, beta 1");
  sweep_cmd->add_flag("--fig8", fig8, "n 3, alpha_exp 1.8, beta {1.0,0.9,0.8}");
  sweep_cmd->add_option("--points", points, "alpha_usr grid points over [1, 3]");
  sweep_cmd->add_option("--n", sw_n, "Comma list");
  sweep_cmd->add_option("--alpha-exp", sw_aexp, "Comma list or lo:hi:count");
  sweep_cmd->add_option("--beta", sw_beta, "Comma list or lo:hi:count");
  sweep_cmd->add_option("--alpha-usr", sw_ausr, "Comma list or lo:hi:count");
  sweep_cmd->add_option("--alpha-pty", sw_apty, "Comma list (default: linkage)");
  sweep_cmd->add_option("--out", sw_out, "Write the CSV here");

  // parity-hist
  auto* ph = app.add_subcommand("parity-hist", "Per-4KiB ratio histograms of data vs parity");
  std::vector<std::string> corpus;
  std::size_t synth_blocks = 0;
  double synth_ratio = 3.0;
  int ph_n = 3;
  std::size_t bins = 20;
  std::optional<std::string> ph_out;
  ph->add_option("--corpus", corpus, "Corpus file(s), concatenated");
  ph->add_option("--synthetic", synth_blocks, "Use this many synthetic blocks instead");
  ph->add_option("--ratio", synth_ratio, "Target ratio of synthetic blocks");
  ph->add_option("--n", ph_n, "Data strips per stripe");
  ph->add_option("--bins", bins, "Histogram bins");
  ph->add_option("--out", ph_out, "Write the CSV here");

  // accuracy
  auto* acc = app.add_subcommand("accuracy", "Write cost vs classification accuracy and coverage");
  ClassificationConfig acc_cfg;
  std::optional<std::string> acc_out;
  acc->add_option("--ops", acc_cfg.ops, "Writes per grid point");
  acc->add_option("--segments", acc_cfg.segments, "Array segments");
  acc->add_option("--out", acc_out, "Write the CSV here");

  // coverage-sim
  auto* cov = app.add_subcommand("coverage-sim", "Simulated steady-state coverage vs the model");
  CoverageSimConfig cov_cfg;
  std::optional<std::string> cov_flash;
  cov->add_option("--n", cov_cfg.n, "Data strips per stripe");
  cov->add_option("--alpha-exp", cov_cfg.alpha_exp, "Expansion factor");
  cov->add_option("--beta", cov_cfg.beta_util, "Utilization factor");
  cov->add_option("--alpha-usr", cov_cfg.alpha_usr, "User data ratio");
  cov->add_option("--flash", cov_flash, "Flash per device");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*mk) {
      if (persisted_array_exists(g)) {
        raise(Errc::config_invalid, "an array already exists in " + *g.persist);
      }
      Session s = open_session(g, &mk_flags, false);
      s.save();
      const ArrayGeometry& geo = s.array->geometry();
      std::fprintf(stderr, "created %d-device array: %llu segments, user capacity %llu bytes\n",
                   geo.devices(), static_cast<unsigned long long>(geo.segment_count()),
                   static_cast<unsigned long long>(geo.user_capacity_bytes()));
      emit(mk_out, array_stats_json(*s.array));
      return 0;
    }

    if (*bench) {
      Session s = open_session(g, &bench_flags, false);
      if (bench_level) pin_level(*s.array, *bench_level == "r10" ? Level::r10 : Level::r5);
      if (bench_degrade) s.array->fail_device(*bench_degrade);
      s.array->reset_amp();
      const auto [r, w] = parse_rw(rw);
      WorkloadSpec spec;
      spec.op_count = ops;
      spec.read_fraction = r / (r + w);
      spec.distribution = dist == "8020" ? Distribution::hot8020 : Distribution::uniform;
      spec.lba_span_fraction = span;
      spec.seed = s.cfg.seed;
      if (ratio > 1.0) spec.ratio_profile = {RatioRegion{1.0, ratio}};
      spec.submitters = submitters;
      spec.sample_every = sample_every;
      spec.tick_every = tick_every;
      std::unique_ptr<Scheduler> sched;
      if (tick_every != 0) sched = std::make_unique<Scheduler>(*s.array, s.cfg.scheduler_config());
      EventLog log;
      const RunReport rep = run_workload(spec, *s.array, sched.get(), &log);
      if (events_path) emit(events_path, log.to_jsonl());
      emit(report_path, rep.to_json());
      std::fprintf(stderr, "%llu ops: WA %.4f  write RA %.4f  RA %.4f  coverage %.4f\n",
                   static_cast<unsigned long long>(rep.ops), rep.wa, rep.write_ra, rep.ra,
                   s.array->coverage());
      for (const auto& [name, count] : rep.errors) {
        std::fprintf(stderr, "  %llu ops failed with %s\n", static_cast<unsigned long long>(count),
                     name.c_str());
      }
      s.save();
      return 0;
    }

    if (*regen) {
      const EventLog log = EventLog::from_jsonl(read_file(regen_in));
      emit(regen_out, report_from_events(log).to_json());
      return 0;
    }

    if (*conv) {
      Session s = open_session(g, nullptr, true);
      ThrottleConfig t = s.cfg.throttle_config();
      if (throttle) t.max_bytes_per_sec = *throttle * 1e6;
      if (conv_workers) t.worker_count = *conv_workers;
      std::deque<ConversionTask> queue;
      auto take = [&](const std::optional<std::string>& arg, Level from, Direction dir) {
        if (!arg) return;
        const std::uint64_t limit = *arg == "all" ? ~0ull : std::stoull(*arg);
        std::uint64_t taken = 0;
        for (std::uint64_t seg = 0; seg < s.array->geometry().segment_count() && taken < limit;
             ++seg) {
          if (s.array->level(seg) != from) continue;
          queue.push_back(ConversionTask{seg, dir, TaskState::pending});
          ++taken;
        }
      };
      take(promote_arg, Level::r5, Direction::promote);
      take(demote_arg, Level::r10, Direction::demote);
      std::function<void(const ProgressEvent&)> progress;
      if (show_progress) {
        progress = [](const ProgressEvent& e) { std::cerr << progress_event_json(e) << '\n'; };
      }
      const ConversionReport rep = run_conversion_workers(*s.array, queue, t, {}, progress);
      std::ostringstream os;
      os.precision(12);
      os << "{\n  \"completed\": " << rep.completed << ",\n  \"failed\": " << rep.failed
         << ",\n  \"bytes_promoted\": " << rep.bytes_promoted
         << ",\n  \"bytes_demoted\": " << rep.bytes_demoted
         << ",\n  \"sim_seconds\": " << rep.sim_seconds
         << ",\n  \"bytes_per_sec\": " << rep.bytes_per_sec
         << ",\n  \"promote_bytes_per_sec\": " << rep.promote_bytes_per_sec
         << ",\n  \"demote_bytes_per_sec\": " << rep.demote_bytes_per_sec
         << ",\n  \"max_window_bytes\": " << rep.max_window_bytes
         << ",\n  \"coverage\": " << s.array->coverage() << "\n}\n";
      emit(conv_out, os.str());
      s.save();
      return rep.failed == 0 ? 0 : 3;
    }

    if (*deg) {
      Session s = open_session(g, nullptr, true);
      if (restore) {
        s.array->restore_device(deg_device);
        std::fprintf(stderr, "device %d restored and rebuilt\n", deg_device);
      } else {
        s.array->fail_device(deg_device);
        std::fprintf(stderr, "device %d offline; array degraded\n", deg_device);
      }
      s.save();
      return 0;
    }

    if (*scrub) {
      Session s = open_session(g, nullptr, true);
      const ScrubReport r = s.array->scrub();
      std::cout << "{\"segments_checked\": " << r.segments_checked
                << ", \"segments_skipped\": " << r.segments_skipped
                << ", \"parity_mismatches\": " << r.parity_mismatches
                << ", \"mirror_mismatches\": " << r.mirror_mismatches
                << ", \"stale_positions\": " << r.stale_positions
                << ", \"clean\": " << (r.clean() ? "true" : "false") << "}\n";
      if (!r.clean()) raise(Errc::data_loss, "scrub found inconsistent segments");
      return 0;
    }

    if (*stats) {
      Session s = open_session(g, nullptr, true);
      emit(stats_out, array_stats_json(*s.array));
      return 0;
    }

    if (*sweep_cmd) {
      SweepRanges r;
      if (fig7) {
        r = fig7_ranges(points);
      } else if (fig8) {
        r = fig8_ranges(points);
      } else {
        r.n = {3};
        r.alpha_exp = {1.4};
        r.beta_util = {1.0};
        r.alpha_usr = linspace(1.0, 3.0, points);
      }
      if (sw_n) {
        r.n.clear();
        for (double v : parse_list(*sw_n)) r.n.push_back(static_cast<int>(v));
      }
      if (sw_aexp) r.alpha_exp = parse_list(*sw_aexp);
      if (sw_beta) r.beta_util = parse_list(*sw_beta);
      if (sw_ausr) r.alpha_usr = parse_list(*sw_ausr);
      if (sw_apty) r.alpha_pty = parse_list(*sw_apty);
      emit(sw_out, sweep_csv(r));
      const auto rows = sweep(r);
      if (rows.size() == 1 && !rows.front().result.feasible) {
        raise(Errc::infeasible, "even an all-RAID-5 layout needs more flash than the budget; "
                                "lower beta or raise alpha_exp");
      }
      return 0;
    }

    if (*ph) {
      std::vector<std::uint8_t> data;
      if (!corpus.empty()) {
        for (const auto& f : corpus) {
          const std::string bytes = read_file(f);
          data.insert(data.end(), bytes.begin(), bytes.end());
        }
      } else {
        const std::uint64_t seed = g.seed.value_or(1);
        data = synthetic_corpus(synth_blocks == 0 ? 3000 : synth_blocks, synth_ratio, seed);
      }
      const RatioHistogram h = parity_ratio_experiment(data, ph_n, bins);
      emit(ph_out, histogram_csv(h));
      std::fprintf(stderr,
                   "%llu stripes: mean user ratio %.4f, mean parity ratio %.4f, "
                   "one-sided Welch p = %.3g\n",
                   static_cast<unsigned long long>(h.stripes), h.user_mean, h.parity_mean,
                   h.p_value);
      return 0;
    }

    if (*acc) {
      if (g.seed) acc_cfg.seed = *g.seed;
      emit(acc_out, classification_csv(classification_accuracy_experiment(acc_cfg)));
      return 0;
    }

    if (*cov) {
      if (cov_flash) cov_cfg.flash_bytes = parse_size(*cov_flash);
      if (g.seed) cov_cfg.seed = *g.seed;
      const CoverageSimResult r = simulate_coverage(cov_cfg);
      std::printf("{\"model\": %.6f, \"model_feasible\": %s, \"simulated\": %.6f, "
                  "\"simulated_feasible\": %s, \"written_segments\": %llu, \"r10_segments\": %llu}\n",
                  r.model.raid10_fraction, r.model.feasible ? "true" : "false", r.coverage,
                  r.feasible ? "true" : "false",
                  static_cast<unsigned long long>(r.written_segments),
                  static_cast<unsigned long long>(r.r10_segments));
      if (!r.model.feasible) raise(Errc::infeasible, "all-RAID-5 layout does not fit");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "eraid: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "eraid: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
