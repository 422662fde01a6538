#include "eraid/bench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "json.hpp"

#include "eraid/convert/convert.hpp"
#include "eraid/datagen/datagen.hpp"
#include "eraid/error.hpp"
#include "eraid/scheduler/scheduler.hpp"

namespace eraid {

using nlohmann::json;

namespace {

AmpCounters amp_delta(const AmpCounters& a, const AmpCounters& b) {
  AmpCounters d;
  d.user_reads = b.user_reads - a.user_reads;
  d.user_writes = b.user_writes - a.user_writes;
  d.device_reads = b.device_reads - a.device_reads;
  d.device_writes = b.device_writes - a.device_writes;
  d.write_path_reads = b.write_path_reads - a.write_path_reads;
  d.journal_writes = b.journal_writes - a.journal_writes;
  return d;
}

json amp_json(const AmpCounters& a) {
  return json{{"user_reads", a.user_reads},         {"user_writes", a.user_writes},
              {"device_reads", a.device_reads},     {"device_writes", a.device_writes},
              {"write_path_reads", a.write_path_reads}, {"journal_writes", a.journal_writes}};
}

AmpCounters amp_from_json(const json& j) {
  AmpCounters a;
  a.user_reads = j.at("user_reads").get<std::uint64_t>();
  a.user_writes = j.at("user_writes").get<std::uint64_t>();
  a.device_reads = j.at("device_reads").get<std::uint64_t>();
  a.device_writes = j.at("device_writes").get<std::uint64_t>();
  a.write_path_reads = j.at("write_path_reads").get<std::uint64_t>();
  a.journal_writes = j.at("journal_writes").get<std::uint64_t>();
  return a;
}

std::uint64_t span_blocks(const WorkloadSpec& spec, const ArrayGeometry& g) {
  const double f = std::clamp(spec.lba_span_fraction, 0.0, 1.0);
  const auto span = static_cast<std::uint64_t>(std::floor(f * static_cast<double>(g.user_blocks())));
  return std::max<std::uint64_t>(span, 1);
}

// Payload source: modeled devices only need distinct bytes, real devices get
// calibrated synthetic blocks from a small per-region pool.
class PayloadSource {
 public:
  PayloadSource(const WorkloadSpec& spec, std::uint64_t span, CompressMode mode)
      : mode_(mode) {
    double acc = 0.0;
    for (const auto& r : spec.ratio_profile) {
      acc += r.span_fraction;
      bounds_.push_back(static_cast<std::uint64_t>(std::ceil(acc * static_cast<double>(span))));
      ratios_.push_back(r.ratio);
    }
    if (mode_ == CompressMode::real) {
      for (std::size_t i = 0; i < ratios_.size(); ++i) {
        std::vector<Block> pool;
        for (std::uint64_t k = 0; k < kPool; ++k) {
          pool.push_back(ratios_[i] <= 1.0
                             ? synth_block(BlockSpec{1.0, spec.seed * 131 + i * kPool + k})
                             : synth_block(BlockSpec{ratios_[i], spec.seed * 131 + i * kPool + k}));
        }
        pools_.push_back(std::move(pool));
      }
    }
  }

  std::optional<double> ratio_for(std::uint64_t lba) const {
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      if (lba < bounds_[i]) return ratios_[i];
    }
    return std::nullopt;
  }

  void fill(std::uint64_t lba, std::uint64_t op, Block& out) const {
    if (mode_ == CompressMode::real && !pools_.empty()) {
      for (std::size_t i = 0; i < bounds_.size(); ++i) {
        if (lba < bounds_[i]) {
          out = pools_[i][(lba + op) % kPool];
          return;
        }
      }
    }
    out.fill(0);
    std::memcpy(out.data(), &lba, 8);
    std::memcpy(out.data() + 8, &op, 8);
  }

  std::optional<SizeHint> hint_for(std::uint64_t lba) const {
    if (mode_ == CompressMode::real) return std::nullopt;
    auto r = ratio_for(lba);
    if (!r || *r <= 1.0) return std::nullopt;
    return SizeHint::of_ratio(*r);
  }

 private:
  static constexpr std::uint64_t kPool = 16;
  CompressMode mode_;
  std::vector<std::uint64_t> bounds_;
  std::vector<double> ratios_;
  std::vector<std::vector<Block>> pools_;
};

}  // namespace

std::vector<std::uint64_t> hot_segment_set(std::uint64_t segments, double hot_fraction,
                                           std::uint64_t seed) {
  std::vector<std::uint64_t> all(segments);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed ^ 0x686f74ull);
  std::shuffle(all.begin(), all.end(), rng);
  const auto k = static_cast<std::size_t>(
      std::llround(std::clamp(hot_fraction, 0.0, 1.0) * static_cast<double>(segments)));
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<Op> generate_ops(const WorkloadSpec& spec, const ArrayGeometry& g) {
  std::vector<Op> ops;
  ops.reserve(spec.op_count);
  const std::uint64_t span = span_blocks(spec, g);
  const std::uint64_t per_seg = static_cast<std::uint64_t>(g.n()) * g.strip_blocks();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<std::uint64_t> hot;
  std::vector<std::uint64_t> cold;
  if (spec.distribution == Distribution::hot8020) {
    const std::uint64_t seg_span = (span + per_seg - 1) / per_seg;
    hot = spec.hot_segments.empty() ? hot_segment_set(seg_span, spec.hot_fraction, spec.seed)
                                    : spec.hot_segments;
    std::vector<bool> is_hot(seg_span, false);
    for (auto s : hot) {
      if (s < seg_span) is_hot[s] = true;
    }
    for (std::uint64_t s = 0; s < seg_span; ++s) {
      if (!is_hot[s]) cold.push_back(s);
    }
    std::erase_if(hot, [&](std::uint64_t s) { return s >= seg_span; });
  }
  for (std::uint64_t i = 0; i < spec.op_count; ++i) {
    Op op;
    op.write = !(u01(rng) < spec.read_fraction);
    if (spec.distribution == Distribution::uniform || (hot.empty() && cold.empty())) {
      op.lba = std::uniform_int_distribution<std::uint64_t>(0, span - 1)(rng);
    } else {
      const bool pick_hot = cold.empty() || (!hot.empty() && u01(rng) < spec.hot_share);
      const auto& set = pick_hot ? hot : cold;
      const std::uint64_t seg =
          set[std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng)];
      const std::uint64_t off = std::uniform_int_distribution<std::uint64_t>(0, per_seg - 1)(rng);
      op.lba = std::min(seg * per_seg + off, span - 1);
    }
    ops.push_back(op);
  }
  return ops;
}

std::string EventLog::to_jsonl() const {
  std::string out;
  auto put = [&](const json& j) {
    out += j.dump();
    out += '\n';
  };
  auto put_sample = [&](const SampleEvent& s) {
    put(json{{"t", "sample"}, {"op", s.op}, {"cov", s.coverage}, {"amp", amp_json(s.amp)}});
  };
  std::size_t next = 0;
  for (const auto& o : ops) {
    while (next < samples.size() && samples[next].op <= o.index) put_sample(samples[next++]);
    put(json{{"t", "op"},
             {"i", o.index},
             {"w", o.write},
             {"lba", o.lba},
             {"lvl", std::string(level_name(o.level))},
             {"err", o.error}});
  }
  for (; next < samples.size(); ++next) put_sample(samples[next]);
  for (const auto& e : run_errors) put(json{{"t", "error"}, {"err", e}});
  return out;
}

EventLog EventLog::from_jsonl(const std::string& text) {
  EventLog log;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("t") == "op") {
      OpEvent o;
      o.index = j.at("i").get<std::uint64_t>();
      o.write = j.at("w").get<bool>();
      o.lba = j.at("lba").get<std::uint64_t>();
      o.level = j.at("lvl") == "R10" ? Level::r10 : Level::r5;
      o.error = j.at("err").get<std::string>();
      log.ops.push_back(std::move(o));
    } else if (j.at("t") == "error") {
      log.run_errors.push_back(j.at("err").get<std::string>());
    } else {
      SampleEvent s;
      s.op = j.at("op").get<std::uint64_t>();
      s.coverage = j.at("cov").get<double>();
      s.amp = amp_from_json(j.at("amp"));
      log.samples.push_back(s);
    }
  }
  return log;
}

RunReport report_from_events(const EventLog& log) {
  RunReport r;
  r.ops = log.ops.size();
  for (const auto& o : log.ops) {
    (o.write ? r.writes : r.reads) += 1;
    (o.level == Level::r10 ? r.r10_ops : r.r5_ops) += 1;
    if (!o.error.empty()) ++r.errors[o.error];
  }
  for (const auto& e : log.run_errors) ++r.errors[e];
  if (log.samples.size() >= 2) {
    r.amp = amp_delta(log.samples.front().amp, log.samples.back().amp);
  }
  r.wa = r.amp.wa();
  r.ra = r.amp.ra();
  r.write_ra = r.amp.write_ra();
  if (r.ops > 0) {
    r.device_ops_per_op =
        static_cast<double>(r.amp.device_reads + r.amp.device_writes + r.amp.write_path_reads) /
        static_cast<double>(r.ops);
  }
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    const auto& s = log.samples[i];
    r.coverage_trace.emplace_back(s.op, s.coverage);
    if (i == 0) continue;
    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    while (cursor < log.ops.size() && log.ops[cursor].index < s.op) {
      hits += log.ops[cursor].level == Level::r10 ? 1 : 0;
      ++total;
      ++cursor;
    }
    if (total > 0) {
      r.beta_trace.emplace_back(s.op, static_cast<double>(hits) / static_cast<double>(total));
    }
  }
  return r;
}

std::string RunReport::to_json() const {
  json j;
  j["ops"] = ops;
  j["reads"] = reads;
  j["writes"] = writes;
  j["r5_ops"] = r5_ops;
  j["r10_ops"] = r10_ops;
  j["errors"] = errors;
  j["counters"] = amp_json(amp);
  j["wa"] = wa;
  j["ra"] = ra;
  j["write_ra"] = write_ra;
  j["device_ops_per_op"] = device_ops_per_op;
  j["coverage_trace"] = json::array();
  for (const auto& [op, c] : coverage_trace) j["coverage_trace"].push_back({op, c});
  j["beta_trace"] = json::array();
  for (const auto& [op, b] : beta_trace) j["beta_trace"].push_back({op, b});
  return j.dump(2);
}

RunReport run_workload(const WorkloadSpec& spec, ElasticArray& array, Scheduler* scheduler,
                       EventLog* log_out) {
  EventLog local;
  EventLog& log = log_out ? *log_out : local;
  log = EventLog{};
  const ArrayGeometry& g = array.geometry();
  const std::vector<Op> ops = generate_ops(spec, g);
  const PayloadSource payload(spec, span_blocks(spec, g), array.config().mode);
  const std::uint64_t per_seg = static_cast<std::uint64_t>(g.n()) * g.strip_blocks();

  auto sample = [&](std::uint64_t op) {
    log.samples.push_back(SampleEvent{op, array.coverage(), array.amp()});
  };
  auto issue = [&](std::uint64_t i, Block& buf) {
    const Op& op = ops[i];
    OpEvent ev;
    ev.index = i;
    ev.write = op.write;
    ev.lba = op.lba;
    ev.level = array.level(op.lba / per_seg);
    try {
      if (op.write) {
        payload.fill(op.lba, i, buf);
        array.write(op.lba, buf, payload.hint_for(op.lba));
      } else {
        array.read_into(op.lba, buf);
      }
    } catch (const Error& e) {
      ev.error = std::string(errc_name(e.code()));
    }
    return ev;
  };

  sample(0);
  if (spec.submitters <= 1) {
    Block buf;
    for (std::uint64_t i = 0; i < ops.size(); ++i) {
      if (spec.sample_every != 0 && i != 0 && i % spec.sample_every == 0) sample(i);
      if (scheduler && spec.tick_every != 0 && i != 0 && i % spec.tick_every == 0) {
        scheduler->tick();
      }
      log.ops.push_back(issue(i, buf));
    }
  } else {
    log.ops.resize(ops.size());
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < spec.submitters; ++t) {
      threads.emplace_back([&, t] {
        Block buf;
        for (std::uint64_t i = t; i < ops.size(); i += spec.submitters) log.ops[i] = issue(i, buf);
      });
    }
    for (auto& th : threads) th.join();
  }
  if (array.journal().enabled()) {
    try {
      array.drain_journal();
    } catch (const Error& e) {
      log.run_errors.emplace_back(errc_name(e.code()));
    }
  }
  sample(ops.size());
  return report_from_events(log);
}

std::vector<ClassificationRow> classification_accuracy_experiment(const ClassificationConfig& cfg) {
  std::vector<ClassificationRow> rows;
  for (double coverage : cfg.coverages) {
    for (double accuracy : cfg.accuracies) {
      ArrayConfig ac;
      ac.geometry.devices = cfg.n + 1;
      ac.geometry.alpha_exp = 1.0;
      ac.geometry.flash_capacity_bytes = cfg.segments * kBlockSize;
      ac.mode = CompressMode::modeled;
      auto array = ElasticArray::create(ac, ElasticArray::make_devices_for(ac));
      const std::uint64_t S = array->geometry().segment_count();

      const auto hot = hot_segment_set(S, 0.2, cfg.seed);
      std::vector<bool> chosen(S, false);
      std::mt19937_64 rng(cfg.seed * 1000003 + static_cast<std::uint64_t>(coverage * 1000) * 7 +
                          static_cast<std::uint64_t>((accuracy + 2.0) * 1000));
      const auto budget =
          static_cast<std::uint64_t>(std::llround(coverage * static_cast<double>(S)));
      std::uint64_t placed = 0;
      if (accuracy >= 0.0) {
        auto order = hot;
        std::shuffle(order.begin(), order.end(), rng);
        const auto want = std::min<std::uint64_t>(
            budget, static_cast<std::uint64_t>(std::llround(accuracy * static_cast<double>(hot.size()))));
        for (std::uint64_t i = 0; i < want; ++i) {
          chosen[order[i]] = true;
          ++placed;
        }
      }
      std::vector<std::uint64_t> rest;
      for (std::uint64_t s = 0; s < S; ++s) {
        if (!chosen[s]) rest.push_back(s);
      }
      std::shuffle(rest.begin(), rest.end(), rng);
      for (std::size_t i = 0; placed < budget && i < rest.size(); ++i, ++placed) chosen[rest[i]] = true;
      for (std::uint64_t s = 0; s < S; ++s) {
        if (chosen[s]) promote_segment(*array, s);
      }

      ClassificationRow row;
      row.accuracy = accuracy;
      row.coverage = coverage;
      std::vector<bool> is_hot(S, false);
      for (auto s : hot) is_hot[s] = true;
      for (std::uint64_t s = 0; s < S; ++s) {
        if (is_hot[s]) {
          ++row.hot_segments;
          row.hot_r10 += chosen[s] ? 1 : 0;
        } else {
          ++row.cold_segments;
          row.cold_r10 += chosen[s] ? 1 : 0;
        }
      }

      WorkloadSpec spec;
      spec.op_count = cfg.ops;
      spec.read_fraction = 0.0;
      spec.distribution = Distribution::hot8020;
      spec.hot_segments = hot;
      spec.seed = cfg.seed;
      spec.ratio_profile = {RatioRegion{1.0, 4.0}};
      array->reset_amp();
      EventLog log;
      const RunReport rep = run_workload(spec, *array, nullptr, &log);
      const std::uint64_t per_seg = static_cast<std::uint64_t>(cfg.n);
      for (const auto& o : log.ops) row.hot_writes += is_hot[o.lba / per_seg] ? 1 : 0;
      row.user_writes = rep.amp.user_writes;
      row.cost_per_write = rep.amp.user_writes == 0
                               ? 0.0
                               : static_cast<double>(rep.amp.device_writes + rep.amp.write_path_reads) /
                                     static_cast<double>(rep.amp.user_writes);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string classification_csv(const std::vector<ClassificationRow>& rows) {
  std::ostringstream os;
  os << "accuracy,coverage,hot_segments,hot_r10,cold_segments,cold_r10,user_writes,hot_writes,"
        "cost_per_write\n";
  for (const auto& r : rows) {
    if (r.accuracy < 0.0) {
      os << "random";
    } else {
      os << r.accuracy;
    }
    os << ',' << r.coverage << ',' << r.hot_segments << ',' << r.hot_r10 << ','
       << r.cold_segments << ',' << r.cold_r10 << ',' << r.user_writes << ',' << r.hot_writes
       << ',' << r.cost_per_write << '\n';
  }
  return os.str();
}

CoverageSimResult simulate_coverage(const CoverageSimConfig& cfg) {
  CoverageSimResult res;
  res.model = raid10_fraction(ModelParams::linked(cfg.n, cfg.alpha_exp, cfg.beta_util, cfg.alpha_usr));

  ArrayConfig ac;
  ac.geometry.devices = cfg.n + 1;
  ac.geometry.flash_capacity_bytes = cfg.flash_bytes;
  ac.geometry.alpha_exp = cfg.alpha_exp;
  ac.mode = CompressMode::modeled;
  ac.parity_policy = ParityPolicy::linkage;
  ac.journal_fraction = 0.0;
  auto array = ElasticArray::create(ac, ElasticArray::make_devices_for(ac));
  const ArrayGeometry& g = array->geometry();

  SchedulerConfig sc;
  sc.c_upper = cfg.flash_bytes - 8 * kBlockSize;
  sc.c_lower = sc.c_upper - 1;
  sc.proactive = false;
  sc.batch_size = cfg.batch;
  sc.seed = cfg.seed;
  sc.v5_reset_period = 0;
  Scheduler sched(*array, sc);

  const std::uint64_t S = g.segment_count();
  res.written_segments = static_cast<std::uint64_t>(
      std::llround(cfg.beta_util * static_cast<double>(S)));
  const std::uint64_t per_seg = static_cast<std::uint64_t>(g.n()) * g.strip_blocks();
  const Block zero{};
  try {
    for (std::uint64_t lba = 0; lba < res.written_segments * per_seg; ++lba) {
      array->write(lba, zero, SizeHint::of_ratio(cfg.alpha_usr));
    }
  } catch (const Error& e) {
    if (e.code() != Errc::out_of_space) throw;
    res.feasible = false;
    return res;
  }

  const std::uint64_t quiet_limit = S / std::max<std::size_t>(cfg.batch, 1) +
                                    static_cast<std::uint64_t>(sc.stability_window) + 4;
  std::uint64_t quiet = 0;
  while (quiet < quiet_limit && res.ticks < 1'000'000) {
    const TickReport t = sched.tick();
    ++res.ticks;
    quiet = t.promoted.empty() && t.demoted.empty() ? quiet + 1 : 0;
  }
  res.r10_segments = array->r10_segments();
  res.coverage = res.written_segments == 0
                     ? 0.0
                     : static_cast<double>(res.r10_segments) /
                           static_cast<double>(res.written_segments);
  return res;
}

std::string array_stats_json(ElasticArray& array) {
  const ArrayGeometry& g = array.geometry();
  json j;
  j["schema"] = "eraid.stats/1";
  j["geometry"] = {{"devices", g.devices()},
                   {"n", g.n()},
                   {"segments", g.segment_count()},
                   {"strip_blocks", g.strip_blocks()},
                   {"user_blocks", g.user_blocks()},
                   {"user_capacity_bytes", g.user_capacity_bytes()},
                   {"flash_capacity_bytes", g.flash_capacity_bytes()},
                   {"device_logical_blocks", g.device_logical_blocks()},
                   {"journal_rows", g.journal_rows()}};
  const ArrayMode m = array.mode();
  j["degraded_device"] = m.degraded() ? json(*m.degraded_device) : json(nullptr);
  const std::uint64_t r10 = array.r10_segments();
  j["levels"] = {{"r5_segments", g.segment_count() - r10},
                 {"r10_segments", r10},
                 {"coverage", array.coverage()},
                 {"bitmap_seq", array.bitmap_seq()}};
  WriteJournal& jr = array.journal();
  j["journal"] = {{"enabled", jr.enabled()},
                  {"capacity_records", jr.capacity_records()},
                  {"pending", jr.pending()},
                  {"rows_in_use", jr.rows_in_use()},
                  {"next_seq", jr.next_seq()}};
  j["amplification"] = amp_json(array.amp());
  j["amplification"]["wa"] = array.amp().wa();
  j["amplification"]["ra"] = array.amp().ra();
  j["amplification"]["write_ra"] = array.amp().write_ra();
  json devs = json::array();
  for (const auto& d : array.devices()) {
    const DeviceStats st = d->stats();
    json pc;
    for (std::size_t c = 0; c < kIoClassCount; ++c) {
      pc[std::string(io_class_name(static_cast<IoClass>(c)))] = {
          {"reads", st.per_class[c].reads},
          {"writes", st.per_class[c].writes},
          {"trims", st.per_class[c].trims}};
    }
    devs.push_back({{"id", d->id()},
                    {"online", d->online()},
                    {"physical_used_bytes", st.physical_used_bytes},
                    {"utilization", static_cast<double>(st.physical_used_bytes) /
                                        static_cast<double>(g.flash_capacity_bytes())},
                    {"logical_mapped_blocks", st.logical_mapped_blocks},
                    {"read_ops", st.read_ops},
                    {"write_ops", st.write_ops},
                    {"trim_ops", st.trim_ops},
                    {"per_class", pc}});
  }
  j["devices"] = devs;
  return j.dump(2);
}

}  // namespace eraid
