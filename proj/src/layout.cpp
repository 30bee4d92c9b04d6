#include "swrc/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <unordered_map>

namespace swrc {

namespace {

int isqrt_exact(int n) {
  if (n < 1) return -1;
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

std::string nearest_squares(int n) {
  const int r = static_cast<int>(std::floor(std::sqrt(static_cast<double>(std::max(n, 0)))));
  return std::to_string(std::max(r, 1) * std::max(r, 1)) + " or " + std::to_string((r + 1) * (r + 1));
}

long key(Cell c) { return static_cast<long>(c.iy) * 1'000'003L + c.ix; }

// Unbiased draw in [0, bound) from the raw 64-bit stream; stable across standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

// Nearest cell to `target` inside `region` that satisfies `free`, scanning rings of growing
// Chebyshev radius and taking the smallest Euclidean distance (ties: row-major order).
template <class Free>
std::optional<Cell> nearest_free(const CellRect& region, Cell target, Free&& free) {
  const int max_r = std::max(region.w, region.h);
  for (int r = 0; r <= max_r; ++r) {
    std::optional<Cell> best;
    long best_d = 0;
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        const Cell c{target.ix + dx, target.iy + dy};
        if (!region.contains(c) || !free(c)) continue;
        const long d = static_cast<long>(dx) * dx + static_cast<long>(dy) * dy;
        if (!best || d < best_d) {
          best = c;
          best_d = d;
        }
      }
    }
    if (best) return best;
  }
  return std::nullopt;
}

}  // namespace

std::string to_string(Arrangement a) {
  switch (a) {
    case Arrangement::kFull: return "FULL";
    case Arrangement::kGrid: return "GRID";
    case Arrangement::kCircle: return "CIRCLE";
    case Arrangement::kRandom: return "RANDOM";
    case Arrangement::kCompartment: return "COMPARTMENT";
  }
  return "?";
}

Arrangement arrangement_from_string(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  for (auto a : {Arrangement::kFull, Arrangement::kGrid, Arrangement::kCircle, Arrangement::kRandom,
                 Arrangement::kCompartment}) {
    if (u == to_string(a)) return a;
  }
  throw ConfigError("unknown arrangement '" + s + "' (expected full, grid, circle, random or compartment)");
}

std::vector<std::size_t> ElectrodeSet::cell_indices(const GridSpec& grid) const {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (const Cell& c : positions) out.push_back(grid.index(c.ix, c.iy));
  return out;
}

std::string ElectrodeSet::tag() const {
  if (arrangement == Arrangement::kCompartment) return "COMPARTMENT(" + std::to_string(compartment) + ")";
  return to_string(arrangement);
}

std::vector<int> lattice_offsets(int extent, int k) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(k));
  const long den = 2L * (k + 1);
  for (int i = 0; i < k; ++i) {
    // round-half-up of (i+1) * extent / (k+1), in exact integer arithmetic
    const long num = 2L * (i + 1) * extent + (k + 1);
    out.push_back(static_cast<int>(num / den));
  }
  return out;
}

ElectrodeSet grid_layout(const CellRect& region, int n_o) {
  const int side = isqrt_exact(n_o);
  if (side < 1) {
    throw ConfigError("grid layout needs a perfect-square electrode count; " + std::to_string(n_o) +
                      " is not (nearest: " + nearest_squares(n_o) + ")");
  }
  const auto ox = lattice_offsets(region.w, side);
  const auto oy = lattice_offsets(region.h, side);
  if (ox.front() < 1 || oy.front() < 1 || ox.back() >= region.w || oy.back() >= region.h ||
      std::adjacent_find(ox.begin(), ox.end()) != ox.end() || std::adjacent_find(oy.begin(), oy.end()) != oy.end()) {
    throw ConfigError("grid layout: " + std::to_string(n_o) + " electrodes do not fit a " +
                      std::to_string(region.w) + "x" + std::to_string(region.h) + " region");
  }
  ElectrodeSet set;
  set.arrangement = Arrangement::kGrid;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) set.positions.push_back({region.x0 + ox[static_cast<std::size_t>(i)], region.y0 + oy[static_cast<std::size_t>(j)]});
  }
  return set;
}

ElectrodeSet circle_layout(const CellRect& region, int n_o) {
  if (n_o < 3) throw ConfigError("circle layout needs at least 3 electrodes");
  if (static_cast<std::size_t>(n_o) > region.area()) throw ConfigError("circle layout: more electrodes than cells");
  const double width = std::min(region.w, region.h);
  const double cx = region.x0 + 0.5 * region.w;
  const double cy = region.y0 + 0.5 * region.h;

  std::vector<std::pair<double, int>> rings;  // (radius, count)
  if (n_o <= 25) {
    rings.push_back({0.4 * width, n_o});
  } else {
    const double r1 = 0.25 * width, r2 = 0.45 * width;
    const int inner = static_cast<int>(std::lround(n_o * r1 / (r1 + r2)));
    rings.push_back({r1, inner});
    rings.push_back({r2, n_o - inner});
  }

  ElectrodeSet set;
  set.arrangement = Arrangement::kCircle;
  std::set<long> used;
  auto round_half_up = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };
  for (const auto& [radius, count] : rings) {
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / count;
      std::optional<Cell> placed;
      // Nudge outward one cell at a time on collision.
      for (double r = radius; r <= radius + width && !placed; r += 1.0) {
        const Cell c{round_half_up(cx + r * std::cos(theta)), round_half_up(cy + r * std::sin(theta))};
        if (!region.contains(c)) break;
        if (!used.contains(key(c))) placed = c;
      }
      if (!placed) {
        const Cell c{round_half_up(cx + radius * std::cos(theta)), round_half_up(cy + radius * std::sin(theta))};
        placed = nearest_free(region, c, [&](Cell q) { return !used.contains(key(q)); });
      }
      if (!placed) throw ConfigError("circle layout: no free cell left");
      used.insert(key(*placed));
      set.positions.push_back(*placed);
    }
  }
  return set;
}

ElectrodeSet random_layout(const CellRect& region, int n_o, std::uint64_t seed) {
  const std::size_t cells = region.area();
  if (n_o < 1 || static_cast<std::size_t>(n_o) > cells) {
    throw ConfigError("random layout: n_o must be in 1.." + std::to_string(cells));
  }
  std::vector<int> pool(cells);
  for (std::size_t i = 0; i < cells; ++i) pool[i] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_o); ++i) {
    const std::size_t j = i + bounded(rng, cells - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + n_o);
  std::sort(chosen.begin(), chosen.end());
  ElectrodeSet set;
  set.arrangement = Arrangement::kRandom;
  set.seed = seed;
  for (int v : chosen) set.positions.push_back({region.x0 + v % region.w, region.y0 + v / region.w});
  return set;
}

ElectrodeSet compartment_layout(const RegionSpec& regions, const MaterialMap& map, int k, int n_o) {
  const CellRect& box = regions.compartment(k);
  const int side = isqrt_exact(n_o);
  if (side < 1) {
    throw ConfigError("compartment layout needs a perfect-square electrode count; " + std::to_string(n_o) +
                      " is not (nearest: " + nearest_squares(n_o) + ")");
  }
  if (static_cast<std::size_t>(n_o) > box.area()) {
    throw ConfigError("compartment layout: " + std::to_string(n_o) + " electrodes exceed the " +
                      std::to_string(box.area()) + "-cell compartment");
  }
  const auto ox = lattice_offsets(box.w, side);
  const auto oy = lattice_offsets(box.h, side);
  std::set<long> used;
  auto free = [&](Cell c) {
    const std::size_t i = map.grid.index(c.ix, c.iy);
    return map.region[i] == Region::kInterior && !used.contains(key(c));
  };
  ElectrodeSet set;
  set.arrangement = Arrangement::kCompartment;
  set.compartment = k;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Cell target{box.x0 + std::min(ox[static_cast<std::size_t>(i)], box.w - 1),
                        box.y0 + std::min(oy[static_cast<std::size_t>(j)], box.h - 1)};
      const auto c = free(target) ? std::optional<Cell>(target) : nearest_free(box, target, free);
      if (!c) throw ConfigError("compartment layout: no free cell left in compartment " + std::to_string(k));
      used.insert(key(*c));
      set.positions.push_back(*c);
    }
  }
  return set;
}

ElectrodeSet full_layout(const CellRect& region) {
  ElectrodeSet set;
  set.arrangement = Arrangement::kFull;
  set.positions.reserve(region.area());
  for (int iy = region.y0; iy < region.y0 + region.h; ++iy) {
    for (int ix = region.x0; ix < region.x0 + region.w; ++ix) set.positions.push_back({ix, iy});
  }
  return set;
}

std::vector<int> rows_within(const ElectrodeSet& full, const ElectrodeSet& subset) {
  std::unordered_map<long, int> where;
  where.reserve(full.positions.size());
  for (std::size_t i = 0; i < full.positions.size(); ++i) where.emplace(key(full.positions[i]), static_cast<int>(i));
  std::vector<int> rows;
  rows.reserve(subset.positions.size());
  for (const Cell& c : subset.positions) {
    const auto it = where.find(key(c));
    if (it == where.end()) {
      throw ConfigError("electrode (" + std::to_string(c.ix) + ", " + std::to_string(c.iy) +
                        ") lies outside the recorded probe set");
    }
    rows.push_back(it->second);
  }
  return rows;
}

}  // namespace swrc
