#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "swrc/drive.hpp"
#include "swrc/llg.hpp"

namespace swrc {

enum class AmplitudeMode { kRms, kTrailingPeak };

/// Envelope features x(r, n) for N_o electrodes over N steps.
struct FeatureMatrix {
  Eigen::MatrixXd values;               // N_o x N
  std::vector<int> electrode_ids;       // N_o
  std::vector<Waveform> step_labels;    // N
  std::vector<int> step_offset;         // N, steps since the owning section started
  std::vector<bool> warmup_mask;        // N, true = excluded from training and scoring

  Eigen::Index electrodes() const { return values.rows(); }
  Eigen::Index steps() const { return values.cols(); }
  /// Keeps only the listed electrode rows, in the given order.
  FeatureMatrix select_rows(const std::vector<int>& rows) const;
  /// Column-wise concatenation; electrode ids must match.
  static FeatureMatrix concat(const FeatureMatrix& a, const FeatureMatrix& b);
};

/// Trailing-window amplitude of a single channel. Feed samples one at a time.
class EnvelopeTracker {
 public:
  EnvelopeTracker(double offset, int window, AmplitudeMode mode = AmplitudeMode::kRms);
  double push(double sample);

 private:
  double offset_;
  int window_;
  AmplitudeMode mode_;
  std::vector<double> ring_;  // squared (RMS) or absolute (peak) deviations
  double sum_ = 0.0;
  long count_ = 0;
};

/// x(r, n) = sqrt(2) * RMS over the trailing `window_steps` samples of s_x - offset (or the
/// trailing peak |s_x - offset|). The first window of every section is flagged as warmup.
FeatureMatrix envelope(const SpinTrace& trace, const std::vector<double>& offsets, int window_steps,
                       const SectionSchedule& schedule, AmplitudeMode mode = AmplitudeMode::kRms);

/// Warmup mask for a schedule: the first `window_steps` of every section.
std::vector<bool> warmup_mask(const SectionSchedule& schedule, int window_steps);
std::vector<int> step_offsets(const SectionSchedule& schedule);

double sigmoid(double u);
/// Inverse sigmoid; throws std::domain_error outside (0, 1).
double logit(double y);

inline constexpr double kTeacherLow = 0.001;
inline constexpr double kTeacherHigh = 0.999;

struct ReadoutModel {
  Eigen::RowVectorXd w_out;
  double clamp_low = kTeacherLow;
  double clamp_high = kTeacherHigh;
};

struct TrainOptions {
  double rcond = 1e-10;  // singular values below rcond * sigma_max are dropped
  double ridge = 0.0;
  int column_stride = 1; // use every k-th unmasked column
};

/// Teacher per step: 1 for SQUARE, 0 for SIN.
std::vector<double> teacher(const std::vector<Waveform>& labels);

/// W = logit(clamp(Y)) X^+ over unmasked columns, minimum-norm via thresholded SVD.
ReadoutModel train_readout(const FeatureMatrix& x, const std::vector<double>& y,
                           const TrainOptions& options = {});

/// Dense-matrix core of train_readout; `targets` are logits, one per column of `x`.
Eigen::RowVectorXd min_norm_solve(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& targets,
                                  double rcond = 1e-10, double ridge = 0.0);

/// y_hat(n) = sigmoid(W x(n)). Throws std::invalid_argument on dimension mismatch.
std::vector<double> predict(const ReadoutModel& model, const FeatureMatrix& x);
std::vector<double> predict(const ReadoutModel& model, const Eigen::MatrixXd& x);

struct Metrics {
  double rmse = 0.0;
  double correct_rate = 0.0;
  double correct_rate_steady = 0.0;  // excludes the first `transient_steps` of each section
  long scored_steps = 0;
};

/// RMSE against unclamped 0/1 targets and the 0.5-threshold decision rate over unmasked steps.
Metrics evaluate(const std::vector<double>& y_hat, const std::vector<Waveform>& labels,
                 const std::vector<bool>& mask, const std::vector<int>& offsets = {},
                 int transient_steps = 300);

/// Mean number of steps after each class switch until the output first lands on the correct
/// side of 0.5. Sections that never reach the correct side count their full length. NaN when
/// there is no switch.
double mean_switch_delay(const std::vector<double>& y_hat, const std::vector<Waveform>& labels,
                         const std::vector<int>& offsets);

}  // namespace swrc
