#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swrc/geometry.hpp"

namespace swrc {

enum class Arrangement : std::uint8_t { kFull, kGrid, kCircle, kRandom, kCompartment };

std::string to_string(Arrangement a);
Arrangement arrangement_from_string(const std::string& s);

/// Output-electrode positions, one cell each.
struct ElectrodeSet {
  std::vector<Cell> positions;
  Arrangement arrangement = Arrangement::kGrid;
  int compartment = 0;  // 1..9 for kCompartment
  std::optional<std::uint64_t> seed;

  int n_o() const { return static_cast<int>(positions.size()); }
  std::vector<std::size_t> cell_indices(const GridSpec& grid) const;
  /// Label used in reports, e.g. "GRID" or "COMPARTMENT(5)".
  std::string tag() const;
};

/// Offsets round-half-up((i + 1) * extent / (k + 1)) for i = 0..k-1.
std::vector<int> lattice_offsets(int extent, int k);

/// sqrt(n_o) x sqrt(n_o) lattice inside `region`. Throws ConfigError for non-squares.
ElectrodeSet grid_layout(const CellRect& region, int n_o);

/// Equiangular points on one circle (n_o <= 25) or two concentric circles.
ElectrodeSet circle_layout(const CellRect& region, int n_o);

/// Uniform sample without replacement over the region's cells.
ElectrodeSet random_layout(const CellRect& region, int n_o, std::uint64_t seed);

/// Lattice inside compartment k (1..9, row-major from top-left). Lattice points landing on an
/// input electrode move to the nearest free compartment cell.
ElectrodeSet compartment_layout(const RegionSpec& regions, const MaterialMap& map, int k, int n_o);

/// Every cell of the region, row-major.
ElectrodeSet full_layout(const CellRect& region);

/// Row index of every position of `subset` inside `full` (both row-major cell lists).
std::vector<int> rows_within(const ElectrodeSet& full, const ElectrodeSet& subset);

}  // namespace swrc
