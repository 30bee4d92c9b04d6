#include "swrc/llg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "swrc/log.hpp"

namespace swrc {

namespace {

struct FieldCoefficients {
  double exch = 0.0;
  double ani_scale = 0.0;
  double demag = 0.0;
  double hx = 0.0;
  double hz = 0.0;
};

FieldCoefficients coefficients(const MaterialMap& map, const FieldTerms& terms) {
  const auto& p = map.params;
  const double dx = map.grid.cell_size;
  FieldCoefficients c;
  if (terms.exchange) c.exch = 2.0 * p.a_ex / (kMu0 * p.ms * dx * dx);
  if (terms.anisotropy) c.ani_scale = 2.0 / (kMu0 * p.ms);
  if (terms.local_demag) c.demag = -p.ms;
  if (terms.zeeman) {
    c.hx = p.h_bias_x;
    c.hz = p.h_ext;
  }
  return c;
}

}  // namespace

double max_mode_frequency(const MaterialMap& map, const IntegratorConfig& cfg) {
  const auto c = coefficients(map, cfg.terms);
  double ku_max = std::max(std::abs(map.params.ku_high), std::abs(map.params.ku_low));
  for (double k : map.ku_base) ku_max = std::max(ku_max, std::abs(k));
  const double h = 8.0 * c.exch + c.ani_scale * ku_max + std::abs(c.demag) + std::abs(c.hz) + std::abs(c.hx);
  return cfg.gamma * kMu0 * h / (2.0 * std::numbers::pi);
}

void check_stability(const MaterialMap& map, const IntegratorConfig& cfg) {
  if (cfg.substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(cfg.macro_step > 0.0)) throw ConfigError("macro step must be positive");
  const double f_max = max_mode_frequency(map, cfg);
  const double bound = 0.5 / f_max;
  if (cfg.dt() > bound) {
    throw StabilityError("integrator step " + std::to_string(cfg.dt() * 1e12) +
                         " ps exceeds stability bound " + std::to_string(bound * 1e12) +
                         " ps (f_max = " + std::to_string(f_max * 1e-9) + " GHz); raise substeps");
  }
}

double uniform_mode_frequency(const MaterialParams& p, double ku, double gamma) {
  const double h = 2.0 * ku / (kMu0 * p.ms) - p.ms + p.h_ext;
  return gamma * kMu0 * h / (2.0 * std::numbers::pi);
}

Vec3Field effective_field(const SpinField& s, const MaterialMap& map, const std::vector<double>& ku_now,
                          const FieldTerms& terms) {
  const auto c = coefficients(map, terms);
  const int nx = map.grid.nx;
  const int ny = map.grid.ny;
  Vec3Field h(s.cells());
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t i = map.grid.index(ix, iy);
      double lx = 0.0, ly = 0.0, lz = 0.0;
      const int nbx[4] = {ix - 1, ix + 1, ix, ix};
      const int nby[4] = {iy, iy, iy - 1, iy + 1};
      for (int k = 0; k < 4; ++k) {
        if (nbx[k] < 0 || nbx[k] >= nx || nby[k] < 0 || nby[k] >= ny) continue;  // free edge
        const std::size_t j = map.grid.index(nbx[k], nby[k]);
        lx += s.x[j] - s.x[i];
        ly += s.y[j] - s.y[i];
        lz += s.z[j] - s.z[i];
      }
      h.x[i] = c.exch * lx + c.hx;
      h.y[i] = c.exch * ly;
      h.z[i] = c.exch * lz + c.ani_scale * ku_now[i] * s.z[i] + c.demag * s.z[i] + c.hz;
    }
  }
  return h;
}

Vec3Field llg_rhs(const SpinField& s, const Vec3Field& h, const std::vector<double>& alpha, double gamma) {
  Vec3Field out(s.cells());
  for (std::size_t i = 0; i < s.cells(); ++i) {
    const double a = alpha[i];
    const double pre = -gamma * kMu0 / (1.0 + a * a);
    const double cx = s.y[i] * h.z[i] - s.z[i] * h.y[i];
    const double cy = s.z[i] * h.x[i] - s.x[i] * h.z[i];
    const double cz = s.x[i] * h.y[i] - s.y[i] * h.x[i];
    const double dx = s.y[i] * cz - s.z[i] * cy;
    const double dy = s.z[i] * cx - s.x[i] * cz;
    const double dz = s.x[i] * cy - s.y[i] * cx;
    out.x[i] = pre * (cx + a * dx);
    out.y[i] = pre * (cy + a * dy);
    out.z[i] = pre * (cz + a * dz);
  }
  return out;
}

double total_energy(const SpinField& s, const MaterialMap& map, const std::vector<double>& ku_now,
                    const FieldTerms& terms) {
  const auto& p = map.params;
  const auto& g = map.grid;
  const double volume = g.cell_size * g.cell_size * g.thickness;
  double e_ex = 0.0, e_local = 0.0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t i = g.index(ix, iy);
      if (terms.exchange) {
        if (ix + 1 < g.nx) {
          const std::size_t j = i + 1;
          e_ex += (s.x[j] - s.x[i]) * (s.x[j] - s.x[i]) + (s.y[j] - s.y[i]) * (s.y[j] - s.y[i]) +
                  (s.z[j] - s.z[i]) * (s.z[j] - s.z[i]);
        }
        if (iy + 1 < g.ny) {
          const std::size_t j = i + static_cast<std::size_t>(g.nx);
          e_ex += (s.x[j] - s.x[i]) * (s.x[j] - s.x[i]) + (s.y[j] - s.y[i]) * (s.y[j] - s.y[i]) +
                  (s.z[j] - s.z[i]) * (s.z[j] - s.z[i]);
        }
      }
      double e = 0.0;
      if (terms.anisotropy) e -= ku_now[i] * s.z[i] * s.z[i];
      if (terms.zeeman) e -= kMu0 * p.ms * (p.h_ext * s.z[i] + p.h_bias_x * s.x[i]);
      if (terms.local_demag) e += 0.5 * kMu0 * p.ms * p.ms * s.z[i] * s.z[i];
      e_local += e;
    }
  }
  return p.a_ex * g.thickness * e_ex + volume * e_local;
}

ElectrodeDrive schedule_drive(const SectionSchedule& schedule) {
  return [schedule](double t) { return drive_at(schedule, t).ku; };
}

LlgIntegrator::LlgIntegrator(const MaterialMap& map, IntegratorConfig cfg) : map_(map), cfg_(cfg) {
  check_stability(map_, cfg_);
  const auto c = coefficients(map_, cfg_.terms);
  exch_coef_ = c.exch;
  ani_scale_ = c.ani_scale;
  demag_coef_ = c.demag;
  hx_ = c.hx;
  hz_ = c.hz;
  const std::size_t n = map_.cells();
  ani_.resize(n);
  c_prec_.resize(n);
  c_damp_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ani_[i] = ani_scale_ * map_.ku_base[i];
    const double a = map_.alpha[i];
    c_prec_[i] = -cfg_.gamma * kMu0 / (1.0 + a * a);
    c_damp_[i] = c_prec_[i] * a;
  }
  for (auto* v : {&acc_x_, &acc_y_, &acc_z_, &st_x_, &st_y_, &st_z_, &nx_x_, &nx_y_, &nx_z_}) v->assign(n, 0.0);
}

void LlgIntegrator::set_electrode_ku(double ku) {
  const double a = ani_scale_ * ku;
  for (std::size_t i : map_.electrode_cells) ani_[i] = a;
}

namespace detail {

enum class Stage { kFirst, kMiddle, kFinal, kRhs };

struct KernelArgs {
  int nx = 0, ny = 0;
  double exch = 0.0, demag = 0.0, hx0 = 0.0, hz0 = 0.0;
  const double* ani = nullptr;
  const double* cp = nullptr;
  const double* cd = nullptr;
};

// Cells [begin, end) of one row with fixed neighbour offsets. `in` is the stage input, `s0` the
// substep start state (overwritten by the final stage), `acc` the weighted slope sum and `out`
// the next stage input.
template <Stage kStage, bool kRenorm>
void stage_cells(const KernelArgs& a, std::ptrdiff_t begin, std::ptrdiff_t end, std::ptrdiff_t l,
                 std::ptrdiff_t r, std::ptrdiff_t u, std::ptrdiff_t d, const double* __restrict ix,
                 const double* __restrict iy, const double* __restrict iz, double* __restrict s0x,
                 double* __restrict s0y, double* __restrict s0z, double* __restrict ax,
                 double* __restrict ay, double* __restrict az, double* __restrict ox,
                 double* __restrict oy, double* __restrict oz, double coef) {
  const double* __restrict ani = a.ani;
  const double* __restrict cp = a.cp;
  const double* __restrict cd = a.cd;
  const double ex = a.exch, dm = a.demag, hx0 = a.hx0, hz0 = a.hz0;
  for (std::ptrdiff_t i = begin; i < end; ++i) {
    const double x = ix[i], y = iy[i], z = iz[i];
    const double hx = ex * (ix[i + l] + ix[i + r] + ix[i + u] + ix[i + d] - 4.0 * x) + hx0;
    const double hy = ex * (iy[i + l] + iy[i + r] + iy[i + u] + iy[i + d] - 4.0 * y);
    const double hz =
        ex * (iz[i + l] + iz[i + r] + iz[i + u] + iz[i + d] - 4.0 * z) + (ani[i] + dm) * z + hz0;
    const double cx = y * hz - z * hy;
    const double cy = z * hx - x * hz;
    const double cz = x * hy - y * hx;
    const double px = y * cz - z * cy;
    const double py = z * cx - x * cz;
    const double pz = x * cy - y * cx;
    const double rx = cp[i] * cx + cd[i] * px;
    const double ry = cp[i] * cy + cd[i] * py;
    const double rz = cp[i] * cz + cd[i] * pz;
    if constexpr (kStage == Stage::kRhs) {
      ox[i] = rx;
      oy[i] = ry;
      oz[i] = rz;
    } else if constexpr (kStage == Stage::kFinal) {
      double nx = s0x[i] + coef * (ax[i] + rx);
      double ny = s0y[i] + coef * (ay[i] + ry);
      double nz = s0z[i] + coef * (az[i] + rz);
      if constexpr (kRenorm) {
        const double inv = 1.0 / std::sqrt(nx * nx + ny * ny + nz * nz);
        nx *= inv;
        ny *= inv;
        nz *= inv;
      }
      s0x[i] = nx;
      s0y[i] = ny;
      s0z[i] = nz;
    } else {
      if constexpr (kStage == Stage::kFirst) {
        ax[i] = rx;
        ay[i] = ry;
        az[i] = rz;
      } else {
        ax[i] += 2.0 * rx;
        ay[i] += 2.0 * ry;
        az[i] += 2.0 * rz;
      }
      ox[i] = s0x[i] + coef * rx;
      oy[i] = s0y[i] + coef * ry;
      oz[i] = s0z[i] + coef * rz;
    }
  }
}

template <Stage kStage, bool kRenorm>
void stage(const KernelArgs& a, const double* ix, const double* iy, const double* iz, double* s0x,
           double* s0y, double* s0z, double* ax, double* ay, double* az, double* ox, double* oy,
           double* oz, double coef) {
  for (int row = 0; row < a.ny; ++row) {
    const std::ptrdiff_t begin = static_cast<std::ptrdiff_t>(row) * a.nx;
    const std::ptrdiff_t end = begin + a.nx;
    // Free edges: a missing neighbour is replaced by the cell itself.
    const std::ptrdiff_t u = row > 0 ? -a.nx : 0;
    const std::ptrdiff_t d = row < a.ny - 1 ? a.nx : 0;
    stage_cells<kStage, kRenorm>(a, begin, begin + 1, 0, 1, u, d, ix, iy, iz, s0x, s0y, s0z, ax, ay, az,
                                 ox, oy, oz, coef);
    stage_cells<kStage, kRenorm>(a, begin + 1, end - 1, -1, 1, u, d, ix, iy, iz, s0x, s0y, s0z, ax, ay,
                                 az, ox, oy, oz, coef);
    stage_cells<kStage, kRenorm>(a, end - 1, end, -1, 0, u, d, ix, iy, iz, s0x, s0y, s0z, ax, ay, az, ox,
                                 oy, oz, coef);
  }
}

}  // namespace detail

using detail::KernelArgs;
using detail::Stage;
using detail::stage;

KernelArgs LlgIntegrator::kernel_args() const {
  KernelArgs a;
  a.nx = map_.grid.nx;
  a.ny = map_.grid.ny;
  a.exch = exch_coef_;
  a.demag = demag_coef_;
  a.hx0 = hx_;
  a.hz0 = hz_;
  a.ani = ani_.data();
  a.cp = c_prec_.data();
  a.cd = c_damp_.data();
  return a;
}

template <bool kRenorm>
void LlgIntegrator::substep(SpinField& s, const ElectrodeDrive& drive, double ts) {
  const double h = cfg_.dt();
  const double half = 0.5 * h;
  const double ku_rest = map_.params.ku_high;
  const KernelArgs a = kernel_args();
  double* sx = s.x.data();
  double* sy = s.y.data();
  double* sz = s.z.data();
  double* ax = acc_x_.data();
  double* ay = acc_y_.data();
  double* az = acc_z_.data();
  double* px = st_x_.data();
  double* py = st_y_.data();
  double* pz = st_z_.data();
  double* qx = nx_x_.data();
  double* qy = nx_y_.data();
  double* qz = nx_z_.data();

  set_electrode_ku(drive ? drive(ts) : ku_rest);
  stage<Stage::kFirst, kRenorm>(a, sx, sy, sz, sx, sy, sz, ax, ay, az, px, py, pz, half);
  set_electrode_ku(drive ? drive(ts + half) : ku_rest);
  stage<Stage::kMiddle, kRenorm>(a, px, py, pz, sx, sy, sz, ax, ay, az, qx, qy, qz, half);
  stage<Stage::kMiddle, kRenorm>(a, qx, qy, qz, sx, sy, sz, ax, ay, az, px, py, pz, h);
  set_electrode_ku(drive ? drive(ts + h) : ku_rest);
  stage<Stage::kFinal, kRenorm>(a, px, py, pz, sx, sy, sz, ax, ay, az, qx, qy, qz, h / 6.0);
}

void LlgIntegrator::step_macro(SpinField& s, const ElectrodeDrive& drive, double t, long step_index) {
  const double h = cfg_.dt();
  for (int sub = 0; sub < cfg_.substeps; ++sub) {
    const double ts = t + sub * h;
    if (cfg_.renormalize) {
      substep<true>(s, drive, ts);
    } else {
      substep<false>(s, drive, ts);
    }
  }
  set_electrode_ku(map_.params.ku_high);

  for (std::size_t i = 0; i < s.cells(); ++i) {
    if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || !std::isfinite(s.z[i])) {
      throw IntegrationDiverged(step_index, "non-finite spin at cell " + std::to_string(i));
    }
  }
}

Vec3Field LlgIntegrator::rhs(const SpinField& s, double ku_electrode) {
  set_electrode_ku(ku_electrode);
  Vec3Field out(s.cells());
  const KernelArgs a = kernel_args();
  // kRhs reads only `in` and writes only `out`; the other pointers are unused scratch.
  stage<Stage::kRhs, false>(a, s.x.data(), s.y.data(), s.z.data(), st_x_.data(), st_y_.data(),
                            st_z_.data(), acc_x_.data(), acc_y_.data(), acc_z_.data(), out.x.data(),
                            out.y.data(), out.z.data(), 0.0);
  set_electrode_ku(map_.params.ku_high);
  return out;
}

double LlgIntegrator::max_torque(const SpinField& s) {
  const auto r = rhs(s, map_.params.ku_high);
  double worst = 0.0;
  for (std::size_t i = 0; i < s.cells(); ++i) {
    worst = std::max(worst, std::sqrt(r.x[i] * r.x[i] + r.y[i] * r.y[i] + r.z[i] * r.z[i]));
  }
  return worst;
}

RunResult run(const SpinField& state, const MaterialMap& map, const SectionSchedule& schedule,
              const std::vector<std::size_t>& probes, const IntegratorConfig& cfg,
              const std::vector<int>& snapshot_steps, const StepObserver& observer) {
  for (std::size_t p : probes) {
    if (p >= map.cells()) throw ConfigError("probe cell index " + std::to_string(p) + " out of range");
  }
  LlgIntegrator integrator(map, cfg);
  const auto drive = schedule_drive(schedule);
  const int steps = schedule.total_steps();

  RunResult out;
  out.final_state = state;
  out.trace.probe_cells = probes;
  out.trace.steps = steps;
  out.trace.t0 = cfg.macro_step;
  out.trace.samples.assign(probes.size() * static_cast<std::size_t>(steps), 0.0f);

  std::vector<int> snaps = snapshot_steps;
  std::sort(snaps.begin(), snaps.end());
  auto next_snap = snaps.begin();

  SpinField& s = out.final_state;
  for (int n = 0; n < steps; ++n) {
    integrator.step_macro(s, drive, n * cfg.macro_step, n);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      out.trace.samples[p * static_cast<std::size_t>(steps) + static_cast<std::size_t>(n)] =
          static_cast<float>(s.x[probes[p]]);
    }
    while (next_snap != snaps.end() && *next_snap == n) {
      Snapshot snap;
      snap.frame_index = static_cast<int>(out.snapshots.size());
      snap.step = n;
      snap.nx = map.grid.nx;
      snap.ny = map.grid.ny;
      snap.sx.assign(s.x.begin(), s.x.end());
      out.snapshots.push_back(std::move(snap));
      ++next_snap;
    }
    if (observer) observer(n, s);
  }
  return out;
}

RelaxResult relax(const SpinField& state, const MaterialMap& map, const IntegratorConfig& cfg,
                  long max_steps, double tolerance, double relax_alpha) {
  MaterialMap damped = map;
  for (double& a : damped.alpha) a = std::max(a, relax_alpha);
  LlgIntegrator integrator(damped, cfg);
  RelaxResult out;
  out.state = state;
  out.max_torque = integrator.max_torque(out.state);
  while (out.max_torque >= tolerance && out.steps < max_steps) {
    integrator.step_macro(out.state, {}, 0.0, out.steps);
    ++out.steps;
    if (out.steps % 10 == 0 || out.steps == max_steps) out.max_torque = integrator.max_torque(out.state);
  }
  out.converged = out.max_torque < tolerance;
  if (!out.converged) {
    log_warn("relax: max |ds/dt| = " + std::to_string(out.max_torque) + " /s after " + std::to_string(out.steps) +
             " steps (tolerance " + std::to_string(tolerance) + "); continuing with best state");
  }
  return out;
}

}  // namespace swrc
