#include <gtest/gtest.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "evacnav/experiment.hpp"

using namespace evacnav;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double num(const std::string& s) {
  double v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("evacnav_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.building = EVACNAV_FIXTURE;
  spec.evacuee_counts = {20, 10};
  spec.algorithms = {Algorithm::cpn_spf, Algorithm::dijkstra};
  spec.comms_modes = {CommsMode::ahcpn, CommsMode::direct3g};
  spec.seeds = {3, 1, 2};
  return spec;
}

}  // namespace

TEST(Experiment, NumbersRoundTrip) {
  for (double v : {0.0, 1.0, 0.1, 1.0 / 3.0, 168.75, 1e-300, 123456.789}) EXPECT_EQ(num(format_number(v)), v);
  EXPECT_EQ(format_number(0.5), "0.5");
}

TEST(Experiment, Summaries) {
  const Stat s = summarize({0.2, 0.4, 0.9});
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_EQ(s.min, 0.2);
  EXPECT_EQ(s.max, 0.9);
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> xs(1 + rng.below(6), 0.1 + 0.3 * rng.uniform());
    const Stat u = summarize(xs);
    EXPECT_LE(u.min, u.mean);
    EXPECT_LE(u.mean, u.max);
  }
}

TEST(Experiment, DefaultMatrixShape) {
  ExperimentSpec spec;
  const auto keys = expand(spec);
  EXPECT_EQ(keys.size(), 120u);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  std::vector<RunRow> rows;
  for (const auto& k : keys) rows.push_back({k, {}});
  EXPECT_EQ(aggregate(rows).size(), 24u);
}

TEST(Experiment, SingleCell) {
  ExperimentSpec spec;
  spec.building = EVACNAV_FIXTURE;
  spec.evacuee_counts = {15};
  spec.algorithms = {Algorithm::cpnst};
  spec.comms_modes = {CommsMode::ahcpn};
  spec.seeds = {7};
  const auto dir = scratch("single");
  const auto agg = run_experiment(spec, SimConfig{}, dir);
  ASSERT_EQ(agg.size(), 1u);
  EXPECT_EQ(agg[0].survivor_pct.min, agg[0].survivor_pct.mean);
  EXPECT_EQ(agg[0].survivor_pct.mean, agg[0].survivor_pct.max);
  EXPECT_EQ(agg[0].drained_phones.min, agg[0].drained_phones.max);
  std::filesystem::remove_all(dir);
}

TEST(Experiment, FilesAreSortedDeterministicAndConsistent) {
  const auto spec = small_spec();
  const auto a = scratch("a");
  const auto b = scratch("b");
  run_experiment(spec, SimConfig{}, a, 1);
  run_experiment(spec, SimConfig{}, b, 3);  // parallel workers must not change the bytes
  for (const char* f : {"results.csv", "summary.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  // running again over existing outputs overwrites them with the same bytes
  const std::string before = slurp(a / "results.csv");
  run_experiment(spec, SimConfig{}, a, 2);
  EXPECT_EQ(slurp(a / "results.csv"), before);

  const auto results = csv(slurp(a / "results.csv"));
  const auto summary = csv(slurp(a / "summary.csv"));
  ASSERT_EQ(results.size(), 1u + 24u);
  ASSERT_EQ(summary.size(), 1u + 8u);
  EXPECT_EQ(results[0].size(), 11u);
  EXPECT_EQ(results[0][0], "evacuees");

  // rows sorted by (count, algorithm, comms, seed) in declaration order of the enums
  for (std::size_t i = 2; i < results.size(); ++i) {
    const auto& p = results[i - 1];
    const auto& r = results[i];
    auto key = [](const std::vector<std::string>& row) {
      return std::tuple(std::stoul(row[0]), static_cast<int>(*parse_algorithm(row[1])),
                        static_cast<int>(*parse_comms(row[2])), std::stoull(row[3]));
    };
    EXPECT_LT(key(p), key(r));
  }

  // recompute every summary row from results.csv
  std::map<std::string, std::vector<std::pair<double, double>>> groups;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const auto& r = results[i];
    groups[r[0] + "," + r[1] + "," + r[2]].push_back({num(r[5]), num(r[8])});
    EXPECT_EQ(num(r[4]) / num(r[0]), num(r[5]));
  }
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& s = summary[i];
    const auto& g = groups.at(s[0] + "," + s[1] + "," + s[2]);
    EXPECT_EQ(std::stoul(s[3]), g.size());
    std::vector<double> pct, dr;
    for (auto [p, d] : g) pct.push_back(p), dr.push_back(d);
    const Stat sp = summarize(pct), sd = summarize(dr);
    EXPECT_EQ(s[4], format_number(sp.mean));
    EXPECT_EQ(s[5], format_number(sp.min));
    EXPECT_EQ(s[6], format_number(sp.max));
    EXPECT_EQ(s[7], format_number(sd.mean));
    EXPECT_EQ(s[8], format_number(sd.min));
    EXPECT_EQ(s[9], format_number(sd.max));
    EXPECT_LE(num(s[5]), num(s[4]));
    EXPECT_LE(num(s[4]), num(s[6]));
  }
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST(Experiment, AggregationIgnoresRowOrder) {
  const auto g = load_building(read_text_file(EVACNAV_FIXTURE));
  auto rows = run_matrix(small_spec(), SimConfig{}, g);
  auto shuffled = rows;
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());
  const auto x = aggregate(rows);
  const auto y = aggregate(shuffled);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(format_summary_row(x[i]), format_summary_row(y[i]));
}

TEST(Experiment, UnwritableOutput) {
  const auto file = scratch("file");
  std::ofstream(file) << "x";
  EXPECT_THROW(run_experiment(small_spec(), SimConfig{}, file / "sub"), Error);
  std::filesystem::remove_all(file);
}
