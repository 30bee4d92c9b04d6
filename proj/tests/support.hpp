#pragma once

#include "swrc/geometry.hpp"

namespace swrc::test {

// 1.2 um film at 20 nm cells: five-cell damper, five-cell electrode radius.
inline GridSpec small_grid(int n = 60) {
  GridSpec g;
  g.nx = g.ny = n;
  g.cell_size = 20e-9;
  return g;
}

inline MaterialMap small_map(double bias = 0.0, int n = 60) {
  MaterialParams p;
  p.h_bias_x = bias;
  return build_geometry(small_grid(n), p);
}

}  // namespace swrc::test
