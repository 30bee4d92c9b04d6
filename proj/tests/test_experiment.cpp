#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "swrc/experiment.hpp"
#include "swrc/io.hpp"
#include "swrc/log.hpp"

using namespace swrc;
namespace fs = std::filesystem;

namespace {

// Fast-profile film with two short sections per phase.
ExperimentConfig tiny_config(const std::string& out) {
  ExperimentConfig c = default_config(Profile::kFast);
  c.schedule.n_train_sections = 3;
  c.schedule.n_test_sections = 2;
  c.schedule.section_len = 200;
  c.readout.transient_steps = 60;
  c.repeats = 2;
  c.n_o = 16;
  c.n_o_list = {4, 16};
  c.sweep_arrangements = {Arrangement::kGrid, Arrangement::kRandom};
  c.out_dir = fs::temp_directory_path() / out;
  fs::remove_all(c.out_dir);
  return c;
}

const Device& tiny_device() {
  static const Device d = [] {
    set_log_level(LogLevel::kQuiet);
    return prepare_device(tiny_config("swrc_test_device"));
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunRecord rec(const std::string& arr, int n_o, double rmse, double rate) {
  RunRecord r;
  r.experiment = "sweep";
  r.arrangement = arr;
  r.n_o = n_o;
  r.rmse = rmse;
  r.correct_rate = rate;
  r.correct_rate_steady = rate;
  r.switch_delay = std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("aggregation uses the sample standard deviation") {
  ExperimentReport rep;
  rep.records = {rec("GRID", 4, 0.1, 0.9), rec("RANDOM", 4, 0.5, 0.5), rec("GRID", 4, 0.3, 0.7)};
  rep.aggregate();
  REQUIRE(rep.aggregates.size() == 2);
  const auto* g = rep.find("GRID", 4);
  REQUIRE(g);
  CHECK(g->count == 2);
  CHECK(g->rmse_mean == doctest::Approx(0.2));
  CHECK(g->rmse_std == doctest::Approx(std::sqrt(0.02)));
  CHECK(rep.find("RANDOM", 4)->rmse_std == 0.0);
  CHECK(rep.find("CIRCLE", 4) == nullptr);
  CHECK(rep.aggregates[0].arrangement == "GRID");
}

TEST_CASE("report files round trip and detect tampering") {
  ExperimentReport rep;
  rep.records = {rec("GRID", 4, 0.1, 0.9), rec("GRID", 4, 0.3, 0.7), rec("CIRCLE", 16, 0.25, 0.8)};
  rep.records[0].switch_delay = 12.5;
  rep.aggregate();
  const fs::path dir = fs::temp_directory_path() / "swrc_test_report";
  fs::remove_all(dir);
  save_report(dir, rep);
  const auto back = load_report(dir);
  REQUIRE(back.records.size() == 3);
  CHECK(back.records[0].switch_delay == 12.5);
  CHECK(std::isnan(back.records[1].switch_delay));
  CHECK(back.records[2].arrangement == "CIRCLE");

  std::string agg = slurp(dir / "aggregates.csv");
  const auto pos = agg.find("0.2,");
  REQUIRE(pos != std::string::npos);
  agg.replace(pos, 4, "0.3,");
  std::ofstream(dir / "aggregates.csv") << agg;
  CHECK_THROWS_AS(load_report(dir), FormatError);
  CHECK_THROWS_AS(load_report(dir / "missing"), FormatError);
}

TEST_CASE("training stride keeps the training matrix within budget") {
  ReadoutParams p;
  CHECK(training_stride(p, 81, 16000) == 1);
  CHECK(training_stride(p, 25600, 16000) == 9);
  p.column_stride = 3;
  CHECK(training_stride(p, 4, 10) == 3);
}

TEST_CASE("seeds and schedules") {
  const auto c = tiny_config("swrc_test_seeds");
  CHECK(train_seed(c, 0) != test_seed(c, 0));
  CHECK(train_seed(c, 0) != train_seed(c, 1));
  const auto tr = train_schedule(c, 0);
  CHECK(tr.sections.size() == 3);
  CHECK(tr.total_steps() == 600);
  CHECK(test_schedule(c, 0).sections.size() == 2);
  const auto f = fixed_schedule(c, {Waveform::kSquare, Waveform::kSin}, 2.4e9);
  CHECK(f.period == doctest::Approx(1.0 / 2.4e9));
  CHECK(f.sections[0].label == Waveform::kSquare);
}

TEST_CASE("features from a shared probe union equal features from a dedicated run") {
  const Device& d = tiny_device();
  const auto grid = make_layout(d, Arrangement::kGrid, 4, 0);
  const auto random = make_layout(d, Arrangement::kRandom, 16, 3);
  const auto probes = probe_union({random, grid});
  std::set<Cell> both(random.positions.begin(), random.positions.end());
  both.insert(grid.positions.begin(), grid.positions.end());
  CHECK(probes.n_o() == static_cast<int>(both.size()));
  CHECK(std::equal(random.positions.begin(), random.positions.end(), probes.positions.begin()));
  const auto sched = train_schedule(d.config, 0);
  const auto shared = simulate_schedule(d, sched, probes);
  const auto own = simulate_schedule(d, sched, grid);
  const auto a = layout_features(d, shared, grid, 40);
  const auto b = layout_features(d, own, grid, 40);
  CHECK(a.values == b.values);
  CHECK(a.step_labels == b.step_labels);
}

TEST_CASE("run_classification writes its artefacts") {
  const Device& base = tiny_device();
  Device d = base;
  d.config.out_dir = fs::temp_directory_path() / "swrc_test_classify";
  fs::remove_all(d.config.out_dir);
  const auto layout = make_layout(d, Arrangement::kGrid, 16, 0);
  const auto c = run_classification(d, layout);
  for (const char* f : {"config.resolved", "electrodes.csv", "weights.csv", "weights.ppm", "records.csv", "aggregates.csv"}) {
    CHECK(fs::exists(d.config.out_dir / f));
  }
  CHECK(c.record.n_o == 16);
  CHECK(c.record.rmse >= 0.0);
  CHECK(c.record.correct_rate >= 0.0);
  CHECK(c.record.correct_rate <= 1.0);
  const auto rep = load_report(d.config.out_dir);
  CHECK(rep.records.size() == 1);
  std::ifstream ws(d.config.out_dir / "weights.csv");
  const auto w = read_weights_csv(ws);
  CHECK(w.cells == layout.positions);
  CHECK(slurp(d.config.out_dir / "config.resolved").find("# config_hash: " + config_hash(d.config)) != std::string::npos);
}

TEST_CASE("sweeps are identical for one and two worker threads") {
  const Device& base = tiny_device();
  Device one = base, two = base;
  one.config.out_dir = fs::temp_directory_path() / "swrc_test_sweep1";
  two.config.out_dir = fs::temp_directory_path() / "swrc_test_sweep2";
  two.config.threads = 2;
  fs::remove_all(one.config.out_dir);
  fs::remove_all(two.config.out_dir);
  const auto a = sweep_electrode_count(one);
  const auto b = sweep_electrode_count(two);
  REQUIRE(a.records.size() == 8);
  CHECK(a.aggregates.size() == 4);
  CHECK(a.records[0].repeat == 0);
  CHECK(a.records[1].repeat == 1);
  CHECK(slurp(one.config.out_dir / "records.csv") == slurp(two.config.out_dir / "records.csv"));
  CHECK(fs::exists(one.config.out_dir / "electrodes" / "random_n16_r1.csv"));
  CHECK_NOTHROW(load_report(one.config.out_dir));
}

TEST_CASE("pearson correlation") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(std::isnan(pearson({1, 1, 1}, {1, 2, 3})));
  CHECK_THROWS_AS(pearson({1}, {1, 2}), std::invalid_argument);
}

}
