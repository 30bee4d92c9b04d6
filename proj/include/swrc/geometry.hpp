#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace swrc {

/// Raised when a configuration value violates a structural or physical constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  int nx = 220;
  int ny = 220;
  double cell_size = 10e-9;  // m
  double thickness = 100e-9; // m

  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix);
  }
  void validate() const;
};

/// Cell coordinate; iy = 0 is the top row of rendered images.
struct Cell {
  int ix = 0;
  int iy = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Axis-aligned cell rectangle [x0, x0+w) x [y0, y0+h).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  bool contains(Cell c) const { return c.ix >= x0 && c.ix < x0 + w && c.iy >= y0 && c.iy < y0 + h; }
  std::size_t area() const { return static_cast<std::size_t>(w) * static_cast<std::size_t>(h); }
  bool intersects(const CellRect& o) const {
    return x0 < o.x0 + o.w && o.x0 < x0 + w && y0 < o.y0 + o.h && o.y0 < y0 + h;
  }
};

/// Static material constants, SI units.
struct MaterialParams {
  double ms = 100e3;            // A/m
  double a_ex = 3.6e-12;        // J/m
  double ku_high = 10e3;        // J/m^3, resting anisotropy everywhere
  double ku_low = 1e3;          // J/m^3, drive minimum
  double h_ext = 30.0;          // A/m along z
  double h_bias_x = 0.0;        // A/m in-plane bias along x
  double alpha_interior = 0.001;
  double alpha_damper = 1.0;
  double damper_width = 0.1e-6; // m
  double electrode_diameter = 0.2e-6;  // m
};

enum class Region : std::uint8_t { kInterior = 0, kDamper = 1, kInputElectrode = 2 };

struct MaterialMap {
  GridSpec grid;
  MaterialParams params;
  std::vector<double> alpha;
  std::vector<double> ku_base;
  std::vector<Region> region;
  std::vector<std::uint8_t> electrode_id;  // 0 = none, 1 or 2
  std::vector<std::size_t> electrode_cells; // indices of all input-electrode cells
  Cell electrode_center[2];
  int damper_cells = 0;  // frame width in cells

  std::size_t cells() const { return grid.cells(); }
};

/// Central readout regions, in cells, derived from physical lengths.
struct RegionSpec {
  CellRect central_full_readout;     // 1.6 um square (160 x 160 at 10 nm)
  CellRect central_compartment_area; // 1.8 um square (180 x 180 at 10 nm)
  CellRect compartments[9];          // row-major, 1 = top-left

  const CellRect& compartment(int k) const;
};

/// Unit magnetization direction per cell, stored as separate component arrays.
struct SpinField {
  GridSpec grid;
  std::vector<double> x, y, z;

  SpinField() = default;
  explicit SpinField(const GridSpec& g)
      : grid(g), x(g.cells(), 0.0), y(g.cells(), 0.0), z(g.cells(), 1.0) {}
  std::size_t cells() const { return x.size(); }
  double max_norm_error() const;
};

MaterialMap build_geometry(const GridSpec& grid, const MaterialParams& params);
RegionSpec build_regions(const GridSpec& grid);

/// Uniform (0, 0, 1) everywhere.
SpinField initial_state(const MaterialMap& map);

/// Uniform state tilted by `angle` radians from z toward x.
SpinField tilted_state(const MaterialMap& map, double angle);

}  // namespace swrc
