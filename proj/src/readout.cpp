#include "swrc/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "swrc/log.hpp"

namespace swrc {

FeatureMatrix FeatureMatrix::select_rows(const std::vector<int>& rows) const {
  FeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
  out.electrode_ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= values.rows()) throw std::out_of_range("feature row out of range");
    out.values.row(static_cast<Eigen::Index>(k)) = values.row(rows[k]);
    out.electrode_ids.push_back(electrode_ids.empty() ? rows[k] : electrode_ids[static_cast<std::size_t>(rows[k])]);
  }
  out.step_labels = step_labels;
  out.step_offset = step_offset;
  out.warmup_mask = warmup_mask;
  return out;
}

FeatureMatrix FeatureMatrix::concat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.values.rows() != b.values.rows() || a.electrode_ids != b.electrode_ids) {
    throw std::invalid_argument("concat: electrode sets differ");
  }
  FeatureMatrix out;
  out.values.resize(a.values.rows(), a.values.cols() + b.values.cols());
  out.values << a.values, b.values;
  out.electrode_ids = a.electrode_ids;
  auto join = [](auto x, const auto& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  out.step_labels = join(a.step_labels, b.step_labels);
  out.step_offset = join(a.step_offset, b.step_offset);
  out.warmup_mask = join(a.warmup_mask, b.warmup_mask);
  return out;
}

EnvelopeTracker::EnvelopeTracker(double offset, int window, AmplitudeMode mode)
    : offset_(offset), window_(window), mode_(mode), ring_(static_cast<std::size_t>(std::max(window, 1)), 0.0) {
  if (window < 1) throw std::invalid_argument("envelope window must be >= 1");
}

double EnvelopeTracker::push(double sample) {
  const double dev = sample - offset_;
  const std::size_t slot = static_cast<std::size_t>(count_ % window_);
  ++count_;
  const long filled = std::min<long>(count_, window_);
  if (mode_ == AmplitudeMode::kRms) {
    const double sq = dev * dev;
    sum_ += sq - ring_[slot];
    ring_[slot] = sq;
    // Running sums can drift a hair below zero when every sample is zero.
    const double mean_sq = std::max(sum_, 0.0) / static_cast<double>(filled);
    return std::numbers::sqrt2 * std::sqrt(mean_sq);
  }
  ring_[slot] = std::abs(dev);
  return *std::max_element(ring_.begin(), ring_.begin() + filled);
}

std::vector<bool> warmup_mask(const SectionSchedule& schedule, int window_steps) {
  std::vector<bool> mask;
  mask.reserve(static_cast<std::size_t>(schedule.total_steps()));
  for (const auto& s : schedule.sections) {
    for (int k = 0; k < s.length_steps; ++k) mask.push_back(k < window_steps);
  }
  return mask;
}

std::vector<int> step_offsets(const SectionSchedule& schedule) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(schedule.total_steps()));
  for (const auto& s : schedule.sections) {
    for (int k = 0; k < s.length_steps; ++k) out.push_back(k);
  }
  return out;
}

FeatureMatrix envelope(const SpinTrace& trace, const std::vector<double>& offsets, int window_steps,
                       const SectionSchedule& schedule, AmplitudeMode mode) {
  if (window_steps < 1) throw std::invalid_argument("envelope window must be >= 1");
  if (trace.steps < window_steps) {
    throw std::invalid_argument("trace of " + std::to_string(trace.steps) + " steps is shorter than the " +
                                std::to_string(window_steps) + "-step envelope window");
  }
  if (offsets.size() != trace.probes()) throw std::invalid_argument("one offset per probe required");
  if (schedule.total_steps() != trace.steps) throw std::invalid_argument("schedule and trace lengths differ");

  FeatureMatrix fm;
  const auto n_o = static_cast<Eigen::Index>(trace.probes());
  fm.values.resize(n_o, trace.steps);
  for (Eigen::Index p = 0; p < n_o; ++p) {
    EnvelopeTracker tracker(offsets[static_cast<std::size_t>(p)], window_steps, mode);
    for (int n = 0; n < trace.steps; ++n) fm.values(p, n) = tracker.push(trace.at(static_cast<std::size_t>(p), n));
  }
  fm.electrode_ids.resize(static_cast<std::size_t>(n_o));
  for (Eigen::Index p = 0; p < n_o; ++p) fm.electrode_ids[static_cast<std::size_t>(p)] = static_cast<int>(p);
  fm.step_labels = schedule.step_labels();
  fm.step_offset = step_offsets(schedule);
  fm.warmup_mask = warmup_mask(schedule, window_steps);
  return fm;
}

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double y) {
  if (!(y > 0.0 && y < 1.0)) throw std::domain_error("logit: argument must lie in (0, 1)");
  return std::log(y / (1.0 - y));
}

std::vector<double> teacher(const std::vector<Waveform>& labels) {
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == Waveform::kSquare ? 1.0 : 0.0;
  return y;
}

Eigen::RowVectorXd min_norm_solve(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& targets, double rcond,
                                  double ridge) {
  if (targets.size() != x.cols()) throw std::invalid_argument("one target per feature column required");
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(x.rows());
  if (x.size() == 0 || x.cwiseAbs().maxCoeff() == 0.0) {
    log_warn("train_readout: feature matrix is all zero; returning zero weights");
    return w;
  }
  // X = U S V^T  =>  W = t V S^+ U^T
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = rcond * sv(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff) inv(k) = ridge > 0.0 ? sv(k) / (sv(k) * sv(k) + ridge) : 1.0 / sv(k);
  }
  const Eigen::RowVectorXd tv = targets * svd.matrixV();
  w = (tv.array() * inv.transpose().array()).matrix() * svd.matrixU().transpose();
  return w;
}

ReadoutModel train_readout(const FeatureMatrix& x, const std::vector<double>& y, const TrainOptions& options) {
  if (y.size() != static_cast<std::size_t>(x.steps())) throw std::invalid_argument("one teacher value per step required");
  if (options.column_stride < 1) throw std::invalid_argument("column stride must be >= 1");
  std::vector<Eigen::Index> cols;
  long unmasked = 0;
  for (Eigen::Index n = 0; n < x.steps(); ++n) {
    const bool masked = !x.warmup_mask.empty() && x.warmup_mask[static_cast<std::size_t>(n)];
    if (masked) continue;
    if (unmasked++ % options.column_stride == 0) cols.push_back(n);
  }
  if (cols.size() < static_cast<std::size_t>(x.electrodes())) {
    log_warn("train_readout: " + std::to_string(cols.size()) + " training columns for " +
             std::to_string(x.electrodes()) + " electrodes; solution is not unique");
  }
  Eigen::MatrixXd sel(x.electrodes(), static_cast<Eigen::Index>(cols.size()));
  Eigen::RowVectorXd targets(static_cast<Eigen::Index>(cols.size()));
  ReadoutModel model;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    sel.col(static_cast<Eigen::Index>(k)) = x.values.col(cols[k]);
    const double yc = std::clamp(y[static_cast<std::size_t>(cols[k])], model.clamp_low, model.clamp_high);
    targets(static_cast<Eigen::Index>(k)) = logit(yc);
  }
  model.w_out = min_norm_solve(sel, targets, options.rcond, options.ridge);
  return model;
}

std::vector<double> predict(const ReadoutModel& model, const Eigen::MatrixXd& x) {
  if (model.w_out.size() != x.rows()) {
    throw std::invalid_argument("predict: model has " + std::to_string(model.w_out.size()) +
                                " weights but features have " + std::to_string(x.rows()) + " rows");
  }
  const Eigen::RowVectorXd u = model.w_out * x;
  std::vector<double> out(static_cast<std::size_t>(u.size()));
  for (Eigen::Index n = 0; n < u.size(); ++n) out[static_cast<std::size_t>(n)] = sigmoid(u(n));
  return out;
}

std::vector<double> predict(const ReadoutModel& model, const FeatureMatrix& x) { return predict(model, x.values); }

Metrics evaluate(const std::vector<double>& y_hat, const std::vector<Waveform>& labels, const std::vector<bool>& mask,
                 const std::vector<int>& offsets, int transient_steps) {
  if (y_hat.size() != labels.size() || (!mask.empty() && mask.size() != labels.size()) ||
      (!offsets.empty() && offsets.size() != labels.size())) {
    throw std::invalid_argument("evaluate: length mismatch");
  }
  double se = 0.0;
  long scored = 0, correct = 0, steady = 0, steady_correct = 0;
  for (std::size_t n = 0; n < y_hat.size(); ++n) {
    if (!mask.empty() && mask[n]) continue;
    const bool square = labels[n] == Waveform::kSquare;
    const double target = square ? 1.0 : 0.0;
    se += (y_hat[n] - target) * (y_hat[n] - target);
    const bool ok = square ? y_hat[n] > 0.5 : y_hat[n] <= 0.5;
    ++scored;
    correct += ok;
    if (offsets.empty() || offsets[n] >= transient_steps) {
      ++steady;
      steady_correct += ok;
    }
  }
  if (scored == 0) throw std::invalid_argument("evaluate: no unmasked steps to score");
  Metrics m;
  m.scored_steps = scored;
  m.rmse = std::sqrt(se / static_cast<double>(scored));
  m.correct_rate = static_cast<double>(correct) / static_cast<double>(scored);
  m.correct_rate_steady = steady > 0 ? static_cast<double>(steady_correct) / static_cast<double>(steady) : 0.0;
  return m;
}

double mean_switch_delay(const std::vector<double>& y_hat, const std::vector<Waveform>& labels,
                         const std::vector<int>& offsets) {
  if (y_hat.size() != labels.size() || offsets.size() != labels.size()) {
    throw std::invalid_argument("mean_switch_delay: length mismatch");
  }
  double total = 0.0;
  int switches = 0;
  for (std::size_t n = 1; n < labels.size(); ++n) {
    if (offsets[n] != 0 || labels[n] == labels[n - 1]) continue;
    const bool square = labels[n] == Waveform::kSquare;
    std::size_t k = n;
    while (k < labels.size() && (k == n || offsets[k] != 0)) {
      const bool ok = square ? y_hat[k] > 0.5 : y_hat[k] <= 0.5;
      if (ok) break;
      ++k;
    }
    total += static_cast<double>(k - n);
    ++switches;
  }
  return switches > 0 ? total / switches : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace swrc
