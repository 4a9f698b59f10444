#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <system_error>
#include <thread>
#include <tuple>
#include <vector>

#include "building.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "sim.hpp"

namespace evacnav {

// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

struct RunKey {
  std::size_t evacuees = 0;
  Algorithm algorithm = Algorithm::dijkstra;
  CommsMode comms = CommsMode::direct3g;
  std::uint64_t seed = 0;

  auto tie() const { return std::tuple(evacuees, static_cast<int>(algorithm), static_cast<int>(comms), seed); }
  friend bool operator<(const RunKey& a, const RunKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const RunKey& a, const RunKey& b) { return a.tie() == b.tie(); }
};

struct RunRow {
  RunKey key;
  RunMetrics metrics;
};

inline constexpr const char* kResultsHeader =
    "evacuees,algorithm,comms,seed,survivors,survivor_pct,casualties,trapped,drained_phones,"
    "mean_evac_time_s,total_energy_j";

inline constexpr const char* kSummaryHeader =
    "evacuees,algorithm,comms,runs,survivor_pct_mean,survivor_pct_min,survivor_pct_max,"
    "drained_phones_mean,drained_phones_min,drained_phones_max";

inline std::string format_results_row(const RunKey& k, const RunMetrics& m) {
  std::string s;
  s += std::to_string(k.evacuees) + ',' + std::string(to_string(k.algorithm)) + ',' +
       std::string(to_string(k.comms)) + ',' + std::to_string(k.seed) + ',';
  s += std::to_string(m.survivors) + ',' + format_number(m.survivor_pct) + ',' + std::to_string(m.casualties) + ',' +
       std::to_string(m.trapped_at_cap) + ',' + std::to_string(m.drained_phones) + ',' +
       format_number(m.mean_evacuation_time_s) + ',' + format_number(m.total_energy_j);
  return s;
}

struct Stat {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Mean/min/max in the order given; the mean is clamped into [min, max] against rounding.
inline Stat summarize(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = std::clamp(sum / static_cast<double>(xs.size()), s.min, s.max);
  return s;
}

struct AggregateRow {
  std::size_t evacuees = 0;
  Algorithm algorithm = Algorithm::dijkstra;
  CommsMode comms = CommsMode::direct3g;
  std::size_t runs = 0;
  Stat survivor_pct;
  Stat drained_phones;
};

// Groups rows (any order) by scenario; seeds within a group are taken in ascending order.
inline std::vector<AggregateRow> aggregate(std::vector<RunRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) { return a.key < b.key; });
  std::vector<AggregateRow> out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    std::vector<double> pct, drained;
    while (j < rows.size() && rows[j].key.evacuees == rows[i].key.evacuees &&
           rows[j].key.algorithm == rows[i].key.algorithm && rows[j].key.comms == rows[i].key.comms) {
      pct.push_back(rows[j].metrics.survivor_pct);
      drained.push_back(static_cast<double>(rows[j].metrics.drained_phones));
      ++j;
    }
    out.push_back({rows[i].key.evacuees, rows[i].key.algorithm, rows[i].key.comms, j - i, summarize(pct),
                   summarize(drained)});
    i = j;
  }
  return out;
}

inline std::string format_summary_row(const AggregateRow& a) {
  return std::to_string(a.evacuees) + ',' + std::string(to_string(a.algorithm)) + ',' +
         std::string(to_string(a.comms)) + ',' + std::to_string(a.runs) + ',' + format_number(a.survivor_pct.mean) +
         ',' + format_number(a.survivor_pct.min) + ',' + format_number(a.survivor_pct.max) + ',' +
         format_number(a.drained_phones.mean) + ',' + format_number(a.drained_phones.min) + ',' +
         format_number(a.drained_phones.max);
}

// Every (count, algorithm, comms, seed) combination, in output order.
inline std::vector<RunKey> expand(const ExperimentSpec& spec) {
  std::vector<RunKey> keys;
  for (auto n : spec.evacuee_counts)
    for (auto a : spec.algorithms)
      for (auto c : spec.comms_modes)
        for (auto s : spec.seeds) keys.push_back({n, a, c, s});
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

// Runs the whole matrix on `workers` threads. Output order never depends on scheduling.
inline std::vector<RunRow> run_matrix(const ExperimentSpec& spec, const SimConfig& base, const BuildingGraph& g,
                                      unsigned workers = 1) {
  const std::vector<RunKey> keys = expand(spec);
  std::vector<RunRow> rows(keys.size());
  std::size_t next = 0;
  std::mutex m;
  std::exception_ptr failure;
  auto work = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(m);
        if (next >= keys.size() || failure) return;
        i = next++;
      }
      try {
        SimConfig cfg = base;
        cfg.evacuee_count = keys[i].evacuees;
        cfg.algorithm = keys[i].algorithm;
        cfg.comms_mode = keys[i].comms;
        cfg.seed = keys[i].seed;
        rows[i] = {keys[i], run(cfg, g)};
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline void write_lines(const std::filesystem::path& path, const std::string& header,
                        const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

// Writes results.csv (one row per run) and summary.csv (one row per scenario) into out_dir.
inline std::vector<AggregateRow> run_experiment(const ExperimentSpec& spec, const SimConfig& base,
                                                const std::filesystem::path& out_dir, unsigned workers = 1) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw Error("output directory " + out_dir.string() + " is not writable");
  const BuildingGraph g = load_building(read_text_file(spec.building));
  const std::vector<RunRow> rows = run_matrix(spec, base, g, workers);

  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(format_results_row(r.key, r.metrics));
  write_lines(out_dir / "results.csv", kResultsHeader, lines);

  const std::vector<AggregateRow> agg = aggregate(rows);
  lines.clear();
  for (const auto& a : agg) lines.push_back(format_summary_row(a));
  write_lines(out_dir / "summary.csv", kSummaryHeader, lines);
  return agg;
}

}  // namespace evacnav
