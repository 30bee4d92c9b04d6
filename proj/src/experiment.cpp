#include "swrc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "swrc/io.hpp"
#include "swrc/log.hpp"

namespace swrc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string seed_text(std::uint64_t s) { return std::to_string(s); }

std::string labels_text(const SectionSchedule& s) {
  std::string out;
  for (const auto& sec : s.sections) out += std::string(out.empty() ? "" : " ") + to_string(sec.label);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

// Runs job(i) for i in [0, n) on up to `threads` workers. done(i) is called under a lock after
// each successful job. The first exception is rethrown once all workers have stopped.
void parallel_for(int n, int threads, const std::function<void(int)>& job, const std::function<void(int)>& done) {
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
        std::lock_guard lock(mu);
        done(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string layout_file(const ElectrodeSet& layout, int repeat) {
  std::string tag = layout.tag();
  std::replace(tag.begin(), tag.end(), '(', '_');
  tag.erase(std::remove(tag.begin(), tag.end(), ')'), tag.end());
  return lower(tag) + "_n" + std::to_string(layout.n_o()) + "_r" + std::to_string(repeat) + ".csv";
}

void write_layout(const std::filesystem::path& dir, const ElectrodeSet& layout, int repeat) {
  std::filesystem::create_directories(dir / "electrodes");
  auto os = open_out(dir / "electrodes" / layout_file(layout, repeat));
  write_electrodes_csv(os, layout);
}

const CellRect& render_region(const Device& d, const ElectrodeSet& layout) {
  return layout.arrangement == Arrangement::kCompartment ? d.regions.central_compartment_area
                                                         : d.regions.central_full_readout;
}

void write_weights(const Device& d, const std::filesystem::path& dir, const ReadoutModel& model,
                   const ElectrodeSet& layout) {
  {
    auto os = open_out(dir / "weights.csv");
    write_weights_csv(os, model, layout);
  }
  write_ppm_file(dir / "weights.ppm", render_weight_map(model, layout, render_region(d, layout)));
}

std::vector<std::string> provenance(const Device& d, const std::vector<std::pair<std::string, const SectionSchedule*>>& schedules) {
  std::vector<std::string> lines{"profile: " + to_string(d.config.profile), "seed: " + seed_text(d.config.seed),
                                 "h_bias_x_A_per_m: " + format_g9(d.config.material.h_bias_x)};
  for (const auto& [name, s] : schedules) {
    lines.push_back(name + "_seed: " + seed_text(s->seed));
    lines.push_back(name + "_sections: " + labels_text(*s));
  }
  return lines;
}

Metrics evaluate_waveform(const std::vector<double>& y_hat, const FeatureMatrix& x, std::optional<Waveform> only,
                          int transient) {
  std::vector<bool> mask = x.warmup_mask;
  if (only) {
    for (std::size_t n = 0; n < mask.size(); ++n) mask[n] = mask[n] || x.step_labels[n] != *only;
  }
  return evaluate(y_hat, x.step_labels, mask, x.step_offset, transient);
}

long unmasked(const std::vector<bool>& mask) { return std::count(mask.begin(), mask.end(), false); }

}  // namespace

// ---- report ------------------------------------------------------------------------------

void ExperimentReport::aggregate() {
  aggregates.clear();
  using Key = std::tuple<std::string, std::string, int, double, std::string>;
  std::map<Key, std::size_t> where;
  std::vector<std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    const Key k{r.experiment, r.arrangement, r.n_o, r.frequency_ghz, r.waveform};
    auto [it, fresh] = where.emplace(k, groups.size());
    if (fresh) {
      groups.emplace_back();
      aggregates.push_back({r.experiment, r.arrangement, r.n_o, r.frequency_ghz, r.waveform});
    }
    groups[it->second].push_back(&r);
  }
  auto stats = [](const std::vector<const RunRecord*>& g, double RunRecord::*field) {
    double mean = 0.0;
    for (const auto* r : g) mean += r->*field;
    mean /= static_cast<double>(g.size());
    double ss = 0.0;
    for (const auto* r : g) ss += (r->*field - mean) * (r->*field - mean);
    const double sd = g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto& a = aggregates[i];
    a.count = static_cast<int>(groups[i].size());
    std::tie(a.rmse_mean, a.rmse_std) = stats(groups[i], &RunRecord::rmse);
    std::tie(a.rate_mean, a.rate_std) = stats(groups[i], &RunRecord::correct_rate);
    std::tie(a.steady_mean, a.steady_std) = stats(groups[i], &RunRecord::correct_rate_steady);
  }
}

const Aggregate* ExperimentReport::find(const std::string& arrangement, int n_o, double frequency_ghz,
                                        const std::string& waveform) const {
  for (const auto& a : aggregates) {
    if (a.arrangement == arrangement && a.n_o == n_o &&
        (frequency_ghz == 0.0 || std::abs(a.frequency_ghz - frequency_ghz) < 1e-9) &&
        a.waveform == waveform) {
      return &a;
    }
  }
  return nullptr;
}

namespace {

const char* kRecordHeader =
    "experiment,arrangement,n_o,repeat,layout_seed,train_seed,test_seed,frequency_GHz,waveform,rmse,correct_rate,"
    "correct_rate_steady,switch_delay_steps";
const char* kAggregateHeader =
    "experiment,arrangement,n_o,frequency_GHz,waveform,count,rmse_mean,rmse_std,correct_rate_mean,correct_rate_std,"
    "correct_rate_steady_mean,correct_rate_steady_std";

double num(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("expected a number, got '" + s + "'");
  }
}

std::uint64_t u64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("expected an unsigned integer, got '" + s + "'");
  }
}

std::vector<std::vector<std::string>> read_rows(std::istream& is, const std::string& header) {
  std::string line;
  if (!std::getline(is, line) || line != header) throw FormatError("expected header '" + header + "'");
  const auto width = split_csv_line(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != width) throw FormatError("row has " + std::to_string(f.size()) + " fields, expected " + std::to_string(width));
    rows.push_back(std::move(f));
  }
  return rows;
}

bool close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-7 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records) {
    os << r.experiment << ',' << r.arrangement << ',' << r.n_o << ',' << r.repeat << ',' << r.layout_seed << ','
       << r.train_seed << ',' << r.test_seed << ',' << format_g9(r.frequency_ghz) << ',' << r.waveform << ','
       << format_g9(r.rmse) << ',' << format_g9(r.correct_rate) << ',' << format_g9(r.correct_rate_steady) << ','
       << format_g9(r.switch_delay) << '\n';
  }
}

std::vector<RunRecord> read_records_csv(std::istream& is) {
  std::vector<RunRecord> out;
  for (const auto& f : read_rows(is, kRecordHeader)) {
    RunRecord r;
    r.experiment = f[0];
    r.arrangement = f[1];
    r.n_o = static_cast<int>(num(f[2]));
    r.repeat = static_cast<int>(num(f[3]));
    r.layout_seed = u64(f[4]);
    r.train_seed = u64(f[5]);
    r.test_seed = u64(f[6]);
    r.frequency_ghz = num(f[7]);
    r.waveform = f[8];
    r.rmse = num(f[9]);
    r.correct_rate = num(f[10]);
    r.correct_rate_steady = num(f[11]);
    r.switch_delay = num(f[12]);
    out.push_back(r);
  }
  return out;
}

void write_aggregates_csv(std::ostream& os, const std::vector<Aggregate>& aggregates) {
  os << kAggregateHeader << '\n';
  for (const auto& a : aggregates) {
    os << a.experiment << ',' << a.arrangement << ',' << a.n_o << ',' << format_g9(a.frequency_ghz) << ','
       << a.waveform << ',' << a.count << ',' << format_g9(a.rmse_mean) << ',' << format_g9(a.rmse_std) << ','
       << format_g9(a.rate_mean) << ',' << format_g9(a.rate_std) << ',' << format_g9(a.steady_mean) << ','
       << format_g9(a.steady_std) << '\n';
  }
}

std::vector<Aggregate> read_aggregates_csv(std::istream& is) {
  std::vector<Aggregate> out;
  for (const auto& f : read_rows(is, kAggregateHeader)) {
    Aggregate a;
    a.experiment = f[0];
    a.arrangement = f[1];
    a.n_o = static_cast<int>(num(f[2]));
    a.frequency_ghz = num(f[3]);
    a.waveform = f[4];
    a.count = static_cast<int>(num(f[5]));
    a.rmse_mean = num(f[6]);
    a.rmse_std = num(f[7]);
    a.rate_mean = num(f[8]);
    a.rate_std = num(f[9]);
    a.steady_mean = num(f[10]);
    a.steady_std = num(f[11]);
    out.push_back(a);
  }
  return out;
}

void save_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  {
    auto os = open_out(dir / "records.csv");
    write_records_csv(os, report.records);
  }
  auto os = open_out(dir / "aggregates.csv");
  write_aggregates_csv(os, report.aggregates);
}

ExperimentReport load_report(const std::filesystem::path& dir) {
  ExperimentReport report;
  {
    std::ifstream is(dir / "records.csv");
    if (!is) throw FormatError("cannot open " + (dir / "records.csv").string());
    report.records = read_records_csv(is);
  }
  std::ifstream is(dir / "aggregates.csv");
  if (!is) throw FormatError("cannot open " + (dir / "aggregates.csv").string());
  const auto stored = read_aggregates_csv(is);
  report.aggregate();
  if (stored.size() != report.aggregates.size()) {
    throw FormatError("aggregates.csv has " + std::to_string(stored.size()) + " groups; records give " +
                      std::to_string(report.aggregates.size()));
  }
  for (std::size_t i = 0; i < stored.size(); ++i) {
    const auto& s = stored[i];
    const auto& c = report.aggregates[i];
    const bool same = s.experiment == c.experiment && s.arrangement == c.arrangement && s.n_o == c.n_o &&
                      close(s.frequency_ghz, c.frequency_ghz) && s.waveform == c.waveform && s.count == c.count &&
                      close(s.rmse_mean, c.rmse_mean) && close(s.rmse_std, c.rmse_std) &&
                      close(s.rate_mean, c.rate_mean) && close(s.rate_std, c.rate_std) &&
                      close(s.steady_mean, c.steady_mean) && close(s.steady_std, c.steady_std);
    if (!same) {
      throw FormatError("aggregate row " + std::to_string(i + 1) + " (" + s.arrangement + ", n_o " +
                        std::to_string(s.n_o) + ") does not match the records");
    }
  }
  report.aggregates = stored;
  return report;
}

// ---- device and schedules ----------------------------------------------------------------

Device prepare_device(const ExperimentConfig& config) {
  validate(config);
  Device d;
  d.config = config;
  d.map = build_geometry(config.grid, config.material);
  d.regions = build_regions(config.grid);
  d.integrator = config.integrator;
  d.integrator.macro_step = config.schedule.t0;
  check_stability(d.map, d.integrator);
  const auto r = relax(initial_state(d.map), d.map, d.integrator, config.relax_max_steps, config.relax_tolerance);
  log_info("relaxed in " + std::to_string(r.steps) + " steps, max torque " + format_g9(r.max_torque) + " 1/s");
  d.relaxed = r.state;
  return d;
}

std::uint64_t train_seed(const ExperimentConfig& c, int repeat) { return derive_seed(c.seed, 1, static_cast<std::uint64_t>(repeat)); }
std::uint64_t test_seed(const ExperimentConfig& c, int repeat) { return derive_seed(c.seed, 2, static_cast<std::uint64_t>(repeat)); }
std::uint64_t layout_seed(const ExperimentConfig& c, int repeat, int n_o) {
  return derive_seed(c.seed, 3, static_cast<std::uint64_t>(repeat) * 100000u + static_cast<std::uint64_t>(n_o));
}

SectionSchedule train_schedule(const ExperimentConfig& c, int repeat) {
  return build_schedule(c.schedule.n_train_sections, c.schedule.section_len, c.schedule.t0, c.schedule.period(),
                        train_seed(c, repeat), c.material.ku_high, c.material.ku_low);
}

SectionSchedule test_schedule(const ExperimentConfig& c, int repeat) {
  return build_schedule(c.schedule.n_test_sections, c.schedule.section_len, c.schedule.t0, c.schedule.period(),
                        test_seed(c, repeat), c.material.ku_high, c.material.ku_low);
}

SectionSchedule fixed_schedule(const ExperimentConfig& c, const std::vector<Waveform>& labels, double frequency) {
  SectionSchedule s;
  for (Waveform w : labels) s.sections.push_back({w, c.schedule.section_len});
  s.t0 = c.schedule.t0;
  s.period = 1.0 / frequency;
  s.ku_high = c.material.ku_high;
  s.ku_low = c.material.ku_low;
  return s;
}

ScheduleRun simulate_schedule(const Device& d, const SectionSchedule& schedule, const ElectrodeSet& probes) {
  ScheduleRun out;
  out.schedule = schedule;
  out.probes = probes;
  out.trace = run(d.relaxed, d.map, schedule, probes.cell_indices(d.config.grid), d.integrator).trace;
  return out;
}

ElectrodeSet probe_union(const std::vector<ElectrodeSet>& layouts) {
  ElectrodeSet out;
  out.arrangement = Arrangement::kFull;
  std::set<std::pair<int, int>> seen;
  for (const auto& l : layouts) {
    for (const Cell& c : l.positions) {
      if (seen.insert({c.ix, c.iy}).second) out.positions.push_back(c);
    }
  }
  return out;
}

FeatureMatrix layout_features(const Device& d, const ScheduleRun& run, const ElectrodeSet& layout, int window_steps) {
  const auto rows = rows_within(run.probes, layout);
  SpinTrace sub;
  sub.steps = run.trace.steps;
  sub.t0 = run.trace.t0;
  sub.samples.resize(rows.size() * static_cast<std::size_t>(sub.steps));
  std::vector<double> offsets;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto r = static_cast<std::size_t>(rows[k]);
    sub.probe_cells.push_back(run.trace.probe_cells[r]);
    offsets.push_back(d.relaxed.x[run.trace.probe_cells[r]]);
    std::copy_n(run.trace.samples.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(sub.steps)), sub.steps,
                sub.samples.begin() + static_cast<std::ptrdiff_t>(k * static_cast<std::size_t>(sub.steps)));
  }
  return envelope(sub, offsets, window_steps, run.schedule, d.config.readout.mode);
}

ElectrodeSet make_layout(const Device& d, Arrangement arrangement, int n_o, std::uint64_t seed, int compartment) {
  const CellRect& region = d.regions.central_full_readout;
  switch (arrangement) {
    case Arrangement::kFull: return full_layout(region);
    case Arrangement::kGrid: return grid_layout(region, n_o);
    case Arrangement::kCircle: return circle_layout(region, n_o);
    case Arrangement::kRandom: return random_layout(region, n_o, seed);
    case Arrangement::kCompartment: return compartment_layout(d.regions, d.map, compartment, n_o);
  }
  throw ConfigError("unknown arrangement");
}

int training_stride(const ReadoutParams& p, Eigen::Index n_o, long unmasked_columns) {
  if (p.column_stride > 0) return p.column_stride;
  const long double values = static_cast<long double>(n_o) * static_cast<long double>(unmasked_columns);
  if (values <= static_cast<long double>(p.max_train_values)) return 1;
  return static_cast<int>(std::ceil(values / static_cast<long double>(p.max_train_values)));
}

// ---- classification ----------------------------------------------------------------------

Classification classify_layout(const Device& d, const ScheduleRun& train, const ScheduleRun& test, const ElectrodeSet& layout) {
  const auto& rc = d.config.readout;
  const int window = d.config.window_steps();
  const FeatureMatrix xtr = layout_features(d, train, layout, window);
  TrainOptions opts{rc.rcond, rc.ridge, training_stride(rc, xtr.electrodes(), unmasked(xtr.warmup_mask))};

  Classification out;
  out.layout = layout;
  out.model = train_readout(xtr, teacher(xtr.step_labels), opts);
  out.train = evaluate(predict(out.model, xtr), xtr.step_labels, xtr.warmup_mask, xtr.step_offset, rc.transient_steps);

  const FeatureMatrix xte = layout_features(d, test, layout, window);
  out.y_hat = predict(out.model, xte);
  out.test = evaluate(out.y_hat, xte.step_labels, xte.warmup_mask, xte.step_offset, rc.transient_steps);

  auto& r = out.record;
  r.arrangement = layout.tag();
  r.n_o = layout.n_o();
  r.layout_seed = layout.seed.value_or(0);
  r.train_seed = train.schedule.seed;
  r.test_seed = test.schedule.seed;
  r.frequency_ghz = d.config.schedule.frequency / 1e9;
  r.rmse = out.test.rmse;
  r.correct_rate = out.test.correct_rate;
  r.correct_rate_steady = out.test.correct_rate_steady;
  r.switch_delay = mean_switch_delay(out.y_hat, xte.step_labels, xte.step_offset);
  return out;
}

Classification run_classification(const Device& d, const ElectrodeSet& layout, int repeat) {
  const auto& dir = d.config.out_dir;
  std::filesystem::create_directories(dir);
  const auto tr = train_schedule(d.config, repeat);
  const auto te = test_schedule(d.config, repeat);
  write_resolved(d.config, provenance(d, {{"train", &tr}, {"test", &te}}));
  {
    auto os = open_out(dir / "electrodes.csv");
    write_electrodes_csv(os, layout);
  }

  const ScheduleRun train = simulate_schedule(d, tr, layout);
  const auto& rc = d.config.readout;
  const FeatureMatrix xtr = layout_features(d, train, layout, d.config.window_steps());
  TrainOptions opts{rc.rcond, rc.ridge, training_stride(rc, xtr.electrodes(), unmasked(xtr.warmup_mask))};
  write_weights(d, dir, train_readout(xtr, teacher(xtr.step_labels), opts), layout);

  ScheduleRun test;
  try {
    test = simulate_schedule(d, te, layout);
  } catch (const std::exception& e) {
    auto os = open_out(dir / "failure.txt");
    os << "test simulation failed: " << e.what() << '\n';
    throw;
  }
  Classification out = classify_layout(d, train, test, layout);
  out.record.experiment = "classify";
  out.record.repeat = repeat;
  ExperimentReport report;
  report.records.push_back(out.record);
  report.aggregate();
  save_report(dir, report);
  return out;
}

// ---- full mesh -----------------------------------------------------------------------------

namespace {

// Streams s_x of the layout cells through per-cell envelope trackers.
struct EnvelopeStream {
  std::vector<std::size_t> cells;
  std::vector<double> offsets;
  std::vector<EnvelopeTracker> trackers;
  Eigen::VectorXd x;

  EnvelopeStream(const Device& d, const ElectrodeSet& layout, int window) {
    cells = layout.cell_indices(d.config.grid);
    for (auto c : cells) {
      offsets.push_back(d.relaxed.x[c]);
      trackers.emplace_back(d.relaxed.x[c], window, d.config.readout.mode);
    }
    x.resize(static_cast<Eigen::Index>(cells.size()));
  }

  const Eigen::VectorXd& push(const SpinField& s) {
    for (std::size_t p = 0; p < cells.size(); ++p) x(static_cast<Eigen::Index>(p)) = trackers[p].push(s.x[cells[p]]);
    return x;
  }
};

}  // namespace

FullMeshResult run_full_mesh(const Device& d, int repeat) {
  const auto& cfg = d.config;
  const auto& dir = cfg.out_dir;
  std::filesystem::create_directories(dir);
  const CellRect& region = d.regions.central_full_readout;
  const ElectrodeSet layout = full_layout(region);
  const auto n_o = static_cast<Eigen::Index>(layout.n_o());
  const int window = cfg.window_steps();
  const auto tr = train_schedule(cfg, repeat);
  const auto te = test_schedule(cfg, repeat);
  write_resolved(cfg, provenance(d, {{"train", &tr}, {"test", &te}}));

  FullMeshResult out;
  const auto mask = warmup_mask(tr, window);
  const long scored = unmasked(mask);
  out.column_stride = training_stride(cfg.readout, n_o, scored);
  const Eigen::Index columns = (scored + out.column_stride - 1) / out.column_stride;
  log_info("full mesh: " + std::to_string(n_o) + " electrodes, " + std::to_string(columns) + " training columns (stride " +
           std::to_string(out.column_stride) + ")");

  Eigen::MatrixXd x(n_o, columns);
  std::vector<Waveform> column_labels;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_o);
  {
    EnvelopeStream stream(d, layout, window);
    const auto labels = tr.step_labels();
    long seen = 0;
    Eigen::Index col = 0;
    run(d.relaxed, d.map, tr, {}, d.integrator, {}, [&](int n, const SpinField& s) {
      const auto& v = stream.push(s);
      if (mask[static_cast<std::size_t>(n)]) return;
      mean += v;
      if (seen++ % out.column_stride == 0) {
        x.col(col++) = v;
        column_labels.push_back(labels[static_cast<std::size_t>(n)]);
      }
    });
  }
  mean /= static_cast<double>(scored);

  Eigen::RowVectorXd targets(columns);
  const auto y = teacher(column_labels);
  for (Eigen::Index c = 0; c < columns; ++c) {
    targets(c) = logit(std::clamp(y[static_cast<std::size_t>(c)], kTeacherLow, kTeacherHigh));
  }
  auto& cls = out.run;
  cls.layout = layout;
  cls.model.w_out = min_norm_solve(x, targets, cfg.readout.rcond, cfg.readout.ridge);
  {
    const auto yt = predict(cls.model, x);
    cls.train = evaluate(yt, column_labels, std::vector<bool>(yt.size(), false));
  }
  x.resize(0, 0);
  write_weights(d, dir, cls.model, layout);

  out.mean_envelope.assign(mean.data(), mean.data() + mean.size());
  std::vector<double> abs_w(static_cast<std::size_t>(n_o));
  for (Eigen::Index k = 0; k < n_o; ++k) abs_w[static_cast<std::size_t>(k)] = std::abs(cls.model.w_out(k));
  out.weight_envelope_correlation = pearson(abs_w, out.mean_envelope);
  {
    auto os = open_out(dir / "mean_envelope.csv");
    os << "ix,iy,mean_envelope\n";
    for (std::size_t k = 0; k < layout.positions.size(); ++k) {
      os << layout.positions[k].ix << ',' << layout.positions[k].iy << ',' << format_g9(out.mean_envelope[k]) << '\n';
    }
  }
  write_ppm_file(dir / "envelope.ppm", render_diverging(out.mean_envelope, region.w, region.h));

  cls.y_hat.assign(static_cast<std::size_t>(te.total_steps()), 0.0);
  try {
    EnvelopeStream stream(d, layout, window);
    run(d.relaxed, d.map, te, {}, d.integrator, {}, [&](int n, const SpinField& s) {
      cls.y_hat[static_cast<std::size_t>(n)] = sigmoid(cls.model.w_out.dot(stream.push(s)));
    });
  } catch (const std::exception& e) {
    auto os = open_out(dir / "failure.txt");
    os << "test simulation failed: " << e.what() << '\n';
    throw;
  }
  const auto labels = te.step_labels();
  const auto offsets = step_offsets(te);
  cls.test = evaluate(cls.y_hat, labels, warmup_mask(te, window), offsets, cfg.readout.transient_steps);

  auto& r = cls.record;
  r.experiment = "full";
  r.arrangement = layout.tag();
  r.n_o = static_cast<int>(n_o);
  r.repeat = repeat;
  r.train_seed = tr.seed;
  r.test_seed = te.seed;
  r.frequency_ghz = cfg.schedule.frequency / 1e9;
  r.rmse = cls.test.rmse;
  r.correct_rate = cls.test.correct_rate;
  r.correct_rate_steady = cls.test.correct_rate_steady;
  r.switch_delay = mean_switch_delay(cls.y_hat, labels, offsets);
  ExperimentReport report;
  report.records.push_back(r);
  report.aggregate();
  save_report(dir, report);
  {
    auto os = open_out(dir / "full_mesh.csv");
    os << "weight_envelope_correlation,column_stride,training_columns\n"
       << format_g9(out.weight_envelope_correlation) << ',' << out.column_stride << ',' << columns << '\n';
  }
  return out;
}

// ---- sweeps ------------------------------------------------------------------------------

namespace {

struct PlannedLayout {
  ElectrodeSet layout;
  int slot = 0;  // position in the (layout index, repeat) ordering
};

// Shared driver for sweeps: per repeat, one simulation pair over the union of that repeat's
// layouts, then one classification per layout. Completed repeats are flushed to disk.
ExperimentReport sweep(const Device& d, const std::string& experiment,
                       const std::function<std::vector<ElectrodeSet>(int repeat)>& layouts_for) {
  const auto& cfg = d.config;
  const int repeats = cfg.repeats;
  std::vector<std::vector<RunRecord>> slots(static_cast<std::size_t>(repeats));
  std::vector<bool> complete(static_cast<std::size_t>(repeats), false);
  std::vector<std::string> prov = provenance(d, {});
  for (int r = 0; r < repeats; ++r) {
    prov.push_back("repeat " + std::to_string(r) + ": train_seed " + seed_text(train_seed(cfg, r)) + ", test_seed " +
                   seed_text(test_seed(cfg, r)));
  }
  write_resolved(cfg, prov);

  auto collect = [&] {
    ExperimentReport report;
    const std::size_t per = slots.empty() ? 0 : [&] {
      for (std::size_t r = 0; r < slots.size(); ++r) {
        if (complete[r]) return slots[r].size();
      }
      return std::size_t{0};
    }();
    for (std::size_t k = 0; k < per; ++k) {
      for (std::size_t r = 0; r < slots.size(); ++r) {
        if (complete[r] && k < slots[r].size()) report.records.push_back(slots[r][k]);
      }
    }
    report.aggregate();
    return report;
  };

  auto job = [&](int r) {
    const auto layouts = layouts_for(r);
    for (const auto& l : layouts) write_layout(cfg.out_dir, l, r);
    const ElectrodeSet probes = probe_union(layouts);
    const ScheduleRun train = simulate_schedule(d, train_schedule(cfg, r), probes);
    const ScheduleRun test = simulate_schedule(d, test_schedule(cfg, r), probes);
    std::vector<RunRecord> recs;
    for (const auto& l : layouts) {
      auto c = classify_layout(d, train, test, l);
      c.record.experiment = experiment;
      c.record.repeat = r;
      recs.push_back(c.record);
    }
    slots[static_cast<std::size_t>(r)] = std::move(recs);
    log_info(experiment + ": repeat " + std::to_string(r + 1) + "/" + std::to_string(repeats) + " done");
  };
  try {
    parallel_for(repeats, cfg.threads, job, [&](int r) {
      complete[static_cast<std::size_t>(r)] = true;
      save_report(cfg.out_dir, collect());
    });
  } catch (...) {
    save_report(cfg.out_dir, collect());
    throw;
  }
  return collect();
}

}  // namespace

ExperimentReport sweep_electrode_count(const Device& d) {
  const auto& cfg = d.config;
  if (cfg.n_o_list.empty()) throw ValidationError("n_o list is empty");
  // Layout availability does not depend on the repeat; report skips once.
  for (Arrangement a : cfg.sweep_arrangements) {
    for (int n : cfg.n_o_list) {
      try {
        make_layout(d, a, n, 0);
      } catch (const ConfigError& e) {
        log_warn("sweep: skipping " + to_string(a) + " n_o " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  return sweep(d, "sweep", [&](int r) {
    std::vector<ElectrodeSet> out;
    for (Arrangement a : cfg.sweep_arrangements) {
      for (int n : cfg.n_o_list) {
        try {
          out.push_back(make_layout(d, a, n, layout_seed(cfg, r, n)));
        } catch (const ConfigError&) {
        }
      }
    }
    return out;
  });
}

ExperimentReport sweep_compartments(const Device& d) {
  const auto& cfg = d.config;
  std::vector<ElectrodeSet> layouts;
  for (int k : cfg.compartments) {
    for (int n : cfg.compartment_n_o) layouts.push_back(make_layout(d, Arrangement::kCompartment, n, 0, k));
  }
  return sweep(d, "compartments", [layouts](int) { return layouts; });
}

ExperimentReport frequency_generalization(const Device& d) {
  const auto& cfg = d.config;
  const auto [f1, f2] = cfg.train_frequencies;
  if (f1 <= 0 || f2 <= 0) throw ValidationError("training frequencies must be positive");
  // Fixed layouts repeat identically, so only random layouts use more than one repeat.
  const int repeats = cfg.arrangement == Arrangement::kRandom ? cfg.repeats : 1;
  std::vector<ElectrodeSet> layouts;
  for (int r = 0; r < repeats; ++r) {
    layouts.push_back(make_layout(d, cfg.arrangement, cfg.n_o, layout_seed(cfg, r, cfg.n_o)));
    write_layout(cfg.out_dir, layouts.back(), r);
  }
  const ElectrodeSet probes = probe_union(layouts);

  // Every (frequency, waveform) section is its own simulation from the relaxed state.
  std::vector<double> freqs{f1, f2};
  for (double f : cfg.test_frequencies) {
    if (std::none_of(freqs.begin(), freqs.end(), [&](double g) { return std::abs(g - f) < 1.0; })) freqs.push_back(f);
  }
  auto index_of = [&](double f) {
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      if (std::abs(freqs[i] - f) < 1.0) return i;
    }
    throw std::logic_error("frequency not simulated");
  };
  const Waveform waves[2] = {Waveform::kSin, Waveform::kSquare};
  std::vector<std::string> prov = provenance(d, {});
  prov.push_back("one independent section per (frequency, waveform), each started from the relaxed state");
  write_resolved(cfg, prov);

  std::vector<ScheduleRun> runs(2 * freqs.size());
  parallel_for(static_cast<int>(runs.size()), cfg.threads,
               [&](int i) {
                 const auto k = static_cast<std::size_t>(i);
                 runs[k] = simulate_schedule(d, fixed_schedule(cfg, {waves[k % 2]}, freqs[k / 2]), probes);
               },
               [](int) {});
  auto features = [&](std::size_t f, const ElectrodeSet& layout) {
    const int window = cfg.window_steps(freqs[f]);
    return FeatureMatrix::concat(layout_features(d, runs[2 * f], layout, window),
                                 layout_features(d, runs[2 * f + 1], layout, window));
  };

  ExperimentReport report;
  for (int r = 0; r < repeats; ++r) {
    const auto& layout = layouts[static_cast<std::size_t>(r)];
    const FeatureMatrix x = FeatureMatrix::concat(features(0, layout), features(1, layout));
    TrainOptions opts{cfg.readout.rcond, cfg.readout.ridge,
                      training_stride(cfg.readout, x.electrodes(), unmasked(x.warmup_mask))};
    const ReadoutModel model = train_readout(x, teacher(x.step_labels), opts);
    if (r == 0) write_weights(d, cfg.out_dir, model, layout);
    for (double f : cfg.test_frequencies) {
      const FeatureMatrix xt = features(index_of(f), layout);
      const auto y_hat = predict(model, xt);
      for (std::optional<Waveform> only : {std::optional<Waveform>{}, std::optional{Waveform::kSin},
                                           std::optional{Waveform::kSquare}}) {
        const Metrics m = evaluate_waveform(y_hat, xt, only, cfg.readout.transient_steps);
        RunRecord rec;
        rec.experiment = "freqgen";
        rec.arrangement = layout.tag();
        rec.n_o = layout.n_o();
        rec.repeat = r;
        rec.layout_seed = layout.seed.value_or(0);
        rec.frequency_ghz = std::round(f / 1e3) / 1e6;
        rec.waveform = only ? to_string(*only) : "ALL";
        rec.rmse = m.rmse;
        rec.correct_rate = m.correct_rate;
        rec.correct_rate_steady = m.correct_rate_steady;
        rec.switch_delay = kNaN;
        report.records.push_back(rec);
      }
    }
  }
  // Group by frequency and waveform across repeats.
  std::stable_sort(report.records.begin(), report.records.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.frequency_ghz, a.waveform) < std::tie(b.frequency_ghz, b.waveform);
  });
  report.aggregate();
  save_report(cfg.out_dir, report);
  return report;
}

std::vector<Snapshot> simulate_snapshots(const Device& d) {
  const auto& cfg = d.config;
  const auto steps = cfg.snapshot_steps();
  SectionSchedule s = fixed_schedule(cfg, {cfg.snapshot_waveform}, cfg.schedule.frequency);
  if (!steps.empty()) s.sections[0].length_steps = std::max(s.sections[0].length_steps, steps.back() + 1);
  write_resolved(cfg, provenance(d, {}));
  auto result = run(d.relaxed, d.map, s, {}, d.integrator, steps);
  std::filesystem::create_directories(cfg.out_dir);
  for (const auto& frame : result.snapshots) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d", frame.frame_index);
    write_snapshot_file(cfg.out_dir / (std::string(name) + ".bin"), frame);
    write_ppm_file(cfg.out_dir / (std::string(name) + ".ppm"), render_snapshot(frame));
  }
  return result.snapshots;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("pearson: inputs must be non-empty and equal length");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace swrc
