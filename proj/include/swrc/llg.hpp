#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swrc/drive.hpp"
#include "swrc/geometry.hpp"

namespace swrc {

inline constexpr double kMu0 = 1.25663706212e-6;  // T m / A

/// The configured time step violates dt <= 0.5 / f_max.
class StabilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite spin state encountered while integrating.
class IntegrationDiverged : public std::runtime_error {
 public:
  IntegrationDiverged(long step, const std::string& what)
      : std::runtime_error(what + " (macro step " + std::to_string(step) + ")"), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

struct FieldTerms {
  bool exchange = true;
  bool anisotropy = true;
  bool zeeman = true;
  bool local_demag = true;
};

struct IntegratorConfig {
  double macro_step = 0.01e-9;  // t0, s
  int substeps = 25;
  double gamma = 1.7595e11;     // rad / (s T)
  bool renormalize = true;
  FieldTerms terms;

  double dt() const { return macro_step / substeps; }
};

struct Vec3Field {
  std::vector<double> x, y, z;
  explicit Vec3Field(std::size_t n = 0) : x(n, 0.0), y(n, 0.0), z(n, 0.0) {}
};

/// Upper bound on the linear-mode frequency (Hz) of the discretized system: checkerboard
/// exchange mode plus the largest local fields.
double max_mode_frequency(const MaterialMap& map, const IntegratorConfig& cfg);

/// Throws StabilityError when dt > 0.5 / max_mode_frequency.
void check_stability(const MaterialMap& map, const IntegratorConfig& cfg);

/// Uniform-mode precession frequency (Hz) about z at anisotropy `ku`.
double uniform_mode_frequency(const MaterialParams& p, double ku, double gamma);

/// Effective field (A/m): exchange (5-point, free edges) + uniaxial z anisotropy + Zeeman +
/// thin-film local demag. `ku_now` holds one anisotropy value per cell.
Vec3Field effective_field(const SpinField& spins, const MaterialMap& map,
                          const std::vector<double>& ku_now, const FieldTerms& terms = {});

/// Landau-Lifshitz form of LLG: -(gamma mu0 / (1 + a^2)) [s x H + a s x (s x H)].
Vec3Field llg_rhs(const SpinField& spins, const Vec3Field& field, const std::vector<double>& alpha,
                  double gamma);

/// Total discrete micromagnetic energy (J) for the same terms as effective_field.
double total_energy(const SpinField& spins, const MaterialMap& map, const std::vector<double>& ku_now,
                    const FieldTerms& terms = {});

/// Anisotropy value applied to every input-electrode cell at time t (s). Empty = no drive.
using ElectrodeDrive = std::function<double(double)>;

ElectrodeDrive schedule_drive(const SectionSchedule& schedule);

namespace detail {
struct KernelArgs;
}

/// Fixed-step RK4 integrator with per-substep renormalization. Owns its scratch buffers,
/// so one instance must not be shared between threads.
class LlgIntegrator {
 public:
  LlgIntegrator(const MaterialMap& map, IntegratorConfig cfg);

  /// Advances `state` by one macro step starting at time t.
  void step_macro(SpinField& state, const ElectrodeDrive& drive, double t, long step_index = 0);

  /// ds/dt (1/s) at the given electrode anisotropy, via the same kernel the stepper uses.
  Vec3Field rhs(const SpinField& state, double ku_electrode);

  /// Largest per-cell |ds/dt| at resting anisotropy.
  double max_torque(const SpinField& state);

  const IntegratorConfig& config() const { return cfg_; }
  const MaterialMap& map() const { return map_; }

 private:
  void set_electrode_ku(double ku);
  detail::KernelArgs kernel_args() const;
  template <bool kRenorm>
  void substep(SpinField& s, const ElectrodeDrive& drive, double ts);

  MaterialMap map_;
  IntegratorConfig cfg_;
  double exch_coef_ = 0.0;  // 2A / (mu0 Ms dx^2)
  double ani_scale_ = 0.0;  // 2 / (mu0 Ms)
  double demag_coef_ = 0.0;
  double hx_ = 0.0, hz_ = 0.0;
  std::vector<double> ani_;      // per-cell anisotropy field coefficient
  std::vector<double> c_prec_;   // -gamma mu0 / (1 + a^2)
  std::vector<double> c_damp_;   // c_prec * a
  std::vector<double> acc_x_, acc_y_, acc_z_;
  std::vector<double> st_x_, st_y_, st_z_;
  std::vector<double> nx_x_, nx_y_, nx_z_;
};

struct SpinTrace {
  std::vector<std::size_t> probe_cells;
  int steps = 0;
  double t0 = 0.0;
  /// s_x after each macro step, probe-major: samples[p * steps + n].
  std::vector<float> samples;

  std::size_t probes() const { return probe_cells.size(); }
  float at(std::size_t probe, int step) const {
    return samples[probe * static_cast<std::size_t>(steps) + static_cast<std::size_t>(step)];
  }
};

struct Snapshot {
  int frame_index = 0;
  int step = 0;  // macro step after which the frame was taken
  int nx = 0, ny = 0;
  std::vector<float> sx;  // row-major, y outer
};

/// Called after every macro step with the 0-based step index and the new state.
using StepObserver = std::function<void(int, const SpinField&)>;

struct RunResult {
  SpinTrace trace;
  std::vector<Snapshot> snapshots;
  SpinField final_state;
};

/// Integrates the whole schedule from `state`, sampling s_x at `probes` after every macro step
/// and storing full-frame snapshots after each step listed in `snapshot_steps`.
RunResult run(const SpinField& state, const MaterialMap& map, const SectionSchedule& schedule,
              const std::vector<std::size_t>& probes, const IntegratorConfig& cfg,
              const std::vector<int>& snapshot_steps = {}, const StepObserver& observer = {});

struct RelaxResult {
  SpinField state;
  long steps = 0;
  bool converged = false;
  double max_torque = 0.0;
};

/// Undriven integration with damping raised to `relax_alpha` until max |ds/dt| < tolerance (1/s).
RelaxResult relax(const SpinField& state, const MaterialMap& map, const IntegratorConfig& cfg,
                  long max_steps, double tolerance = 1e4, double relax_alpha = 1.0);

}  // namespace swrc
