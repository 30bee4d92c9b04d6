#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "swrc/config.hpp"
#include "swrc/drive.hpp"
#include "swrc/geometry.hpp"
#include "swrc/layout.hpp"
#include "swrc/llg.hpp"
#include "swrc/readout.hpp"

namespace swrc {

/// One classification run, or one (frequency, waveform) cell of a frequency study.
struct RunRecord {
  std::string experiment;   // classify, sweep, compartments, freqgen, full
  std::string arrangement;  // layout tag, e.g. GRID or COMPARTMENT(5)
  int n_o = 0;
  int repeat = 0;
  std::uint64_t layout_seed = 0;
  std::uint64_t train_seed = 0;
  std::uint64_t test_seed = 0;
  double frequency_ghz = 0.0;
  std::string waveform = "ALL";  // ALL, SIN or SQUARE
  double rmse = 0.0;
  double correct_rate = 0.0;
  double correct_rate_steady = 0.0;
  double switch_delay = 0.0;  // steps, NaN when the test data has no class switch
};

struct Aggregate {
  std::string experiment;
  std::string arrangement;
  int n_o = 0;
  double frequency_ghz = 0.0;
  std::string waveform;
  int count = 0;
  double rmse_mean = 0.0, rmse_std = 0.0;
  double rate_mean = 0.0, rate_std = 0.0;
  double steady_mean = 0.0, steady_std = 0.0;
};

struct ExperimentReport {
  std::vector<RunRecord> records;
  std::vector<Aggregate> aggregates;

  /// Groups records by (experiment, arrangement, n_o, frequency, waveform) in first-appearance
  /// order; sample standard deviation, zero for single runs.
  void aggregate();
  /// First matching group; a zero frequency matches any.
  const Aggregate* find(const std::string& arrangement, int n_o, double frequency_ghz = 0.0,
                        const std::string& waveform = "ALL") const;
};

void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& is);
void write_aggregates_csv(std::ostream& os, const std::vector<Aggregate>& aggregates);
std::vector<Aggregate> read_aggregates_csv(std::istream& is);

/// Writes records.csv and aggregates.csv into `dir`.
void save_report(const std::filesystem::path& dir, const ExperimentReport& report);
/// Reads both files and checks the aggregates against ones recomputed from the records;
/// throws FormatError on disagreement.
ExperimentReport load_report(const std::filesystem::path& dir);

/// Film, regions and relaxed ground state shared by every run of one configuration.
struct Device {
  ExperimentConfig config;
  MaterialMap map;
  RegionSpec regions;
  IntegratorConfig integrator;  // macro step taken from the schedule
  SpinField relaxed;
};

Device prepare_device(const ExperimentConfig& config);

/// Seeds of repeat `r`: train and test schedules draw from disjoint derived streams.
std::uint64_t train_seed(const ExperimentConfig& config, int repeat);
std::uint64_t test_seed(const ExperimentConfig& config, int repeat);
std::uint64_t layout_seed(const ExperimentConfig& config, int repeat, int n_o);

SectionSchedule train_schedule(const ExperimentConfig& config, int repeat);
SectionSchedule test_schedule(const ExperimentConfig& config, int repeat);
/// Fixed sequence of sections at drive frequency `frequency` (Hz).
SectionSchedule fixed_schedule(const ExperimentConfig& config, const std::vector<Waveform>& labels, double frequency);

/// Probe trace of one schedule, recorded once and sliced per layout.
struct ScheduleRun {
  SectionSchedule schedule;
  ElectrodeSet probes;
  SpinTrace trace;
};

ScheduleRun simulate_schedule(const Device& device, const SectionSchedule& schedule, const ElectrodeSet& probes);

/// Envelope features of `layout` taken from a run whose probes contain every layout cell.
FeatureMatrix layout_features(const Device& device, const ScheduleRun& run, const ElectrodeSet& layout, int window_steps);

/// Union of positions, in first-appearance order.
ElectrodeSet probe_union(const std::vector<ElectrodeSet>& layouts);

/// Electrode layout of the requested arrangement; random layouts use `seed`.
ElectrodeSet make_layout(const Device& device, Arrangement arrangement, int n_o, std::uint64_t seed, int compartment = 0);

/// Column stride for training: the configured value, or the smallest that keeps
/// N_o * columns within the configured budget.
int training_stride(const ReadoutParams& params, Eigen::Index n_o, long unmasked_columns);

struct Classification {
  RunRecord record;
  ReadoutModel model;
  ElectrodeSet layout;
  Metrics train;
  Metrics test;
  std::vector<double> y_hat;  // test predictions
};

/// Trains on `train` and scores on `test`, both previously recorded with probes covering `layout`.
Classification classify_layout(const Device& device, const ScheduleRun& train, const ScheduleRun& test,
                               const ElectrodeSet& layout);

/// relax, simulate train, envelope, train, simulate test, predict, evaluate. Writes
/// electrodes.csv, weights.csv, weights.ppm, records.csv, aggregates.csv and config.resolved into
/// the output directory; trained weights are on disk before the test simulation starts.
Classification run_classification(const Device& device, const ElectrodeSet& layout, int repeat = 0);

struct FullMeshResult {
  Classification run;
  std::vector<double> mean_envelope;  // time mean of x(r, .) over scored training steps
  double weight_envelope_correlation = 0.0;
  int column_stride = 1;
};

/// FULL layout over the central readout square with streamed envelopes, so no probe trace is
/// held in memory. Also writes mean_envelope.csv and envelope.ppm.
FullMeshResult run_full_mesh(const Device& device, int repeat = 0);

/// arrangements x n_o list x repeats; one simulation per repeat covering all layouts.
ExperimentReport sweep_electrode_count(const Device& device);

/// compartments x compartment n_o list x repeats.
ExperimentReport sweep_compartments(const Device& device);

/// One model trained on SIN and SQUARE sections at both training frequencies; scored per
/// (test frequency, waveform) and overall.
ExperimentReport frequency_generalization(const Device& device);

/// Snapshots of s_x while driving one section of the configured waveform; frames written as
/// frame_NNNN.bin and frame_NNNN.ppm.
std::vector<Snapshot> simulate_snapshots(const Device& device);

/// Pearson correlation coefficient; NaN when either input is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace swrc
