#include "swrc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace swrc {

namespace {

int to_cells(double length, double cell_size) {
  return static_cast<int>(std::lround(length / cell_size));
}

}  // namespace

void GridSpec::validate() const {
  if (nx < 3 || ny < 3) {
    throw ConfigError("grid must have at least 3 cells per side (nx=" + std::to_string(nx) +
                      ", ny=" + std::to_string(ny) + ")");
  }
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (!(thickness > 0.0)) throw ConfigError("thickness must be positive");
}

double SpinField::max_norm_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
    worst = std::max(worst, std::abs(n - 1.0));
  }
  return worst;
}

const CellRect& RegionSpec::compartment(int k) const {
  if (k < 1 || k > 9) {
    throw ConfigError("compartment number must be in 1..9, got " + std::to_string(k));
  }
  return compartments[k - 1];
}

MaterialMap build_geometry(const GridSpec& grid, const MaterialParams& params) {
  grid.validate();
  if (grid.nx < 40 || grid.ny < 40) {
    throw ConfigError("grid too small: nx and ny must be >= 40 to hold the damper frame and "
                      "input electrodes (nx=" + std::to_string(grid.nx) +
                      ", ny=" + std::to_string(grid.ny) + ")");
  }
  if (!(params.ms > 0.0)) throw ConfigError("ms must be positive");
  if (!(params.a_ex >= 0.0)) throw ConfigError("a_ex must be non-negative");
  if (params.ku_high < params.ku_low) throw ConfigError("ku_high must be >= ku_low");
  if (!(params.electrode_diameter > 0.0)) throw ConfigError("electrode diameter must be positive");
  if (!(params.damper_width >= 0.0)) throw ConfigError("damper width must be non-negative");

  MaterialMap map;
  map.grid = grid;
  map.params = params;
  const std::size_t n = grid.cells();
  map.alpha.assign(n, params.alpha_interior);
  map.ku_base.assign(n, params.ku_high);
  map.region.assign(n, Region::kInterior);
  map.electrode_id.assign(n, 0);

  const double dx = grid.cell_size;
  const int frame = to_cells(params.damper_width, dx);
  map.damper_cells = frame;
  const double radius = 0.5 * params.electrode_diameter;
  const double lx = grid.nx * dx;
  const double ly = grid.ny * dx;

  // Disks sit in the inner corners of the low-damping region, one radius off the frame.
  const double c1x = params.damper_width + radius;
  const double c1y = params.damper_width + radius;
  const double c2x = lx - c1x;
  const double c2y = ly - c1y;
  if (c2x - c1x < 2.0 * radius || c2y - c1y < 2.0 * radius) {
    throw ConfigError("grid too small: input electrodes overlap");
  }
  if (2 * frame + to_cells(2.0 * params.electrode_diameter, dx) >= std::min(grid.nx, grid.ny)) {
    throw ConfigError("grid too small: damper frame and electrodes leave no central readout area");
  }
  map.electrode_center[0] = {static_cast<int>(std::floor(c1x / dx)), static_cast<int>(std::floor(c1y / dx))};
  map.electrode_center[1] = {grid.nx - 1 - map.electrode_center[0].ix, grid.ny - 1 - map.electrode_center[0].iy};

  const double r2 = radius * radius * (1.0 + 1e-12);
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t i = grid.index(ix, iy);
      const bool in_frame = ix < frame || iy < frame || ix >= grid.nx - frame || iy >= grid.ny - frame;
      if (in_frame) {
        map.region[i] = Region::kDamper;
        map.alpha[i] = params.alpha_damper;
        continue;
      }
      const double px = (ix + 0.5) * dx;
      const double py = (iy + 0.5) * dx;
      const double d1 = (px - c1x) * (px - c1x) + (py - c1y) * (py - c1y);
      const double d2 = (px - c2x) * (px - c2x) + (py - c2y) * (py - c2y);
      if (d1 <= r2 || d2 <= r2) {
        map.region[i] = Region::kInputElectrode;
        map.electrode_id[i] = d1 <= r2 ? 1 : 2;
        map.electrode_cells.push_back(i);
      }
    }
  }
  return map;
}

RegionSpec build_regions(const GridSpec& grid) {
  grid.validate();
  // Readout margins measured from the film edge: damper + electrode diameter for the
  // full-readout square, damper + electrode radius for the compartment square.
  MaterialParams defaults;
  const double dx = grid.cell_size;
  const int full_margin = to_cells(defaults.damper_width + defaults.electrode_diameter, dx);
  const int comp_margin = to_cells(defaults.damper_width + 0.5 * defaults.electrode_diameter, dx);

  RegionSpec spec;
  const int fw = grid.nx - 2 * full_margin;
  const int fh = grid.ny - 2 * full_margin;
  if (fw < 1 || fh < 1) throw ConfigError("grid too small for a central readout area");
  spec.central_full_readout = {full_margin, full_margin, fw, fh};

  const int cw = (grid.nx - 2 * comp_margin) / 3 * 3;
  const int ch = (grid.ny - 2 * comp_margin) / 3 * 3;
  if (cw < 3 || ch < 3) throw ConfigError("grid too small for compartments");
  const int cx0 = (grid.nx - cw) / 2;
  const int cy0 = (grid.ny - ch) / 2;
  spec.central_compartment_area = {cx0, cy0, cw, ch};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      spec.compartments[row * 3 + col] = {cx0 + col * cw / 3, cy0 + row * ch / 3, cw / 3, ch / 3};
    }
  }
  return spec;
}

SpinField initial_state(const MaterialMap& map) { return SpinField(map.grid); }

SpinField tilted_state(const MaterialMap& map, double angle) {
  SpinField s(map.grid);
  std::fill(s.x.begin(), s.x.end(), std::sin(angle));
  std::fill(s.z.begin(), s.z.end(), std::cos(angle));
  return s;
}

}  // namespace swrc
