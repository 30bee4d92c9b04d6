#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "swrc/config.hpp"
#include "swrc/experiment.hpp"
#include "swrc/io.hpp"
#include "swrc/log.hpp"

namespace fs = std::filesystem;
using namespace swrc;

namespace {

struct Common {
  std::string config;
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool verbose = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--profile", c.profile, "parameter profile")->check(CLI::IsMember({"paper", "fast"}));
  cmd->add_option("--seed", c.seed, "base seed for schedules and random layouts");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--threads", c.threads, "concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "progress messages");
  cmd->add_flag("-q,--quiet", c.quiet, "suppress warnings");
}

ExperimentConfig load(const Common& c) {
  set_log_level(c.quiet ? LogLevel::kQuiet : c.verbose ? LogLevel::kInfo : LogLevel::kWarn);
  ConfigOverrides o;
  if (!c.profile.empty()) o.profile = profile_from_string(c.profile);
  o.seed = c.seed;
  if (!c.out.empty()) o.out_dir = c.out;
  o.threads = c.threads;
  return c.config.empty() ? parse_config_text("", o) : parse_config(c.config, o);
}

void print_aggregates(const ExperimentReport& report) {
  std::printf("%-16s %5s %9s %6s %5s %17s %17s\n", "arrangement", "n_o", "freq_GHz", "wave", "runs", "rmse", "correct_rate");
  for (const auto& a : report.aggregates) {
    std::printf("%-16s %5d %9.3f %6s %5d %8.4f +- %-6.4f %8.4f +- %-6.4f\n", a.arrangement.c_str(), a.n_o,
                a.frequency_ghz, a.waveform.c_str(), a.count, a.rmse_mean, a.rmse_std, a.rate_mean, a.rate_std);
  }
}

// Region used to place weights when re-rendering: the geometry in a config.resolved next to the
// input, or the given profile/config.
CellRect weight_region(const fs::path& weights_file, const Common& c, const std::string& region) {
  ExperimentConfig cfg;
  const fs::path sibling = weights_file.parent_path() / "config.resolved";
  if (c.config.empty() && c.profile.empty() && fs::exists(sibling)) {
    cfg = parse_config(sibling);
  } else {
    cfg = load(c);
  }
  const RegionSpec regions = build_regions(cfg.grid);
  return region == "compartment" ? regions.central_compartment_area : regions.central_full_readout;
}

int run_render(const Common& c, const std::string& weights, const std::string& snapshot, const std::string& region) {
  if (weights.empty() && snapshot.empty()) throw ValidationError("render needs --weights or --snapshot");
  if (!weights.empty()) {
    std::ifstream is(weights);
    if (!is) throw FormatError("cannot open " + weights);
    const WeightTable table = read_weights_csv(is);
    ReadoutModel model;
    model.w_out = Eigen::Map<const Eigen::RowVectorXd>(table.weights.data(), static_cast<Eigen::Index>(table.weights.size()));
    ElectrodeSet layout;
    layout.positions = table.cells;
    const CellRect box = weight_region(weights, c, region);
    const fs::path out = c.out.empty() ? fs::path(weights).replace_extension(".ppm") : fs::path(c.out) / "weights.ppm";
    if (!c.out.empty()) fs::create_directories(c.out);
    const Image img = render_weight_map(model, layout, box);
    write_ppm_file(out, img);
    std::printf("%s: %dx%d\n", out.string().c_str(), img.width, img.height);
  }
  if (!snapshot.empty()) {
    const Snapshot frame = read_snapshot_file(snapshot);
    const fs::path out = c.out.empty() ? fs::path(snapshot).replace_extension(".ppm")
                                       : fs::path(c.out) / fs::path(snapshot).filename().replace_extension(".ppm");
    if (!c.out.empty()) fs::create_directories(c.out);
    const Image img = render_snapshot(frame);
    write_ppm_file(out, img);
    std::printf("%s: %dx%d\n", out.string().c_str(), img.width, img.height);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-wave reservoir computing simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common common;
  std::string arrangement;
  int n_o = 0;
  std::string weights, snapshot, region = "full";

  auto* simulate = app.add_subcommand("simulate", "drive one section and write s_x snapshots");
  auto* classify = app.add_subcommand("classify", "train and test one readout");
  auto* sweep = app.add_subcommand("sweep", "electrode-count sweep over arrangements");
  auto* compartments = app.add_subcommand("compartments", "readouts confined to each compartment");
  auto* freqgen = app.add_subcommand("freqgen", "frequency generalization study");
  auto* render = app.add_subcommand("render", "re-render images from saved CSV or binary files");
  for (auto* cmd : {simulate, classify, sweep, compartments, freqgen, render}) add_common(cmd, common);
  for (auto* cmd : {classify, freqgen}) {
    cmd->add_option("--arrangement", arrangement, "full, grid, circle or random");
    cmd->add_option("--n-o", n_o, "output electrode count")->check(CLI::PositiveNumber);
  }
  render->add_option("--weights", weights, "weights.csv to render")->check(CLI::ExistingFile);
  render->add_option("--snapshot", snapshot, "binary snapshot frame to render")->check(CLI::ExistingFile);
  render->add_option("--region", region, "region the weights are placed in")->check(CLI::IsMember({"full", "compartment"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (render->parsed()) return run_render(common, weights, snapshot, region);

    ExperimentConfig cfg = load(common);
    if (!arrangement.empty()) cfg.arrangement = arrangement_from_string(arrangement);
    if (n_o > 0) cfg.n_o = n_o;
    validate(cfg);
    const Device device = prepare_device(cfg);

    if (simulate->parsed()) {
      const auto frames = simulate_snapshots(device);
      std::printf("wrote %zu snapshot frames to %s\n", frames.size(), cfg.out_dir.string().c_str());
    } else if (classify->parsed()) {
      if (cfg.arrangement == Arrangement::kFull) {
        const auto r = run_full_mesh(device);
        std::printf("FULL n_o=%d rmse %.4f correct_rate %.4f steady %.4f weight/envelope r=%.4f\n", r.run.record.n_o,
                    r.run.record.rmse, r.run.record.correct_rate, r.run.record.correct_rate_steady,
                    r.weight_envelope_correlation);
      } else {
        if (cfg.arrangement == Arrangement::kCompartment) throw ValidationError("use the compartments command");
        const ElectrodeSet layout = make_layout(device, cfg.arrangement, cfg.n_o, layout_seed(cfg, 0, cfg.n_o));
        const auto r = run_classification(device, layout);
        std::printf("%s n_o=%d rmse %.4f correct_rate %.4f steady %.4f\n", r.record.arrangement.c_str(), r.record.n_o,
                    r.record.rmse, r.record.correct_rate, r.record.correct_rate_steady);
      }
    } else if (sweep->parsed()) {
      print_aggregates(sweep_electrode_count(device));
    } else if (compartments->parsed()) {
      print_aggregates(sweep_compartments(device));
    } else if (freqgen->parsed()) {
      print_aggregates(frequency_generalization(device));
    }
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
