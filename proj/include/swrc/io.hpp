#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "swrc/layout.hpp"
#include "swrc/llg.hpp"
#include "swrc/readout.hpp"

namespace swrc {

/// Malformed or unreadable data file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest-round-trip-safe text for a double at 9 significant digits.
std::string format_g9(double v);

// ---- binary snapshots --------------------------------------------------------------------
// Per frame: "SPNX", u32 nx, u32 ny, u32 frame_index (little-endian), then nx*ny float32 s_x,
// row-major with y outer.

void write_snapshot(std::ostream& os, const Snapshot& frame);
Snapshot read_snapshot(std::istream& is);
void write_snapshot_file(const std::filesystem::path& path, const Snapshot& frame);
Snapshot read_snapshot_file(const std::filesystem::path& path);

// ---- images ------------------------------------------------------------------------------

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  std::array<std::uint8_t, 3> pixel(int x, int y) const;
};

/// Diverging red/white/blue map of signed data (positive red, negative blue), scaled
/// symmetrically to the 99th-percentile absolute value. Throws FormatError on non-finite input.
Image render_diverging(std::span<const double> values, int width, int height);
/// Same map with an explicit symmetric scale; a zero scale renders all white.
Image render_diverging(std::span<const double> values, int width, int height, double scale);

/// 99th-percentile absolute value used as the symmetric color scale.
double percentile_abs(std::span<const double> values, double q = 0.99);

void write_ppm(std::ostream& os, const Image& img);
void write_ppm_file(const std::filesystem::path& path, const Image& img);
Image read_ppm(std::istream& is);
Image read_ppm_file(const std::filesystem::path& path);

/// Weights scattered onto their cells of `region`; cells without an electrode stay zero (white).
/// The scale is the 99th-percentile absolute weight.
Image render_weight_map(const ReadoutModel& model, const ElectrodeSet& layout, const CellRect& region);
Image render_snapshot(const Snapshot& frame);

// ---- CSV ---------------------------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line);

/// electrode,ix,iy,weight
void write_weights_csv(std::ostream& os, const ReadoutModel& model, const ElectrodeSet& layout);
struct WeightTable {
  std::vector<Cell> cells;
  std::vector<double> weights;
};
WeightTable read_weights_csv(std::istream& is);

/// ix,iy
void write_electrodes_csv(std::ostream& os, const ElectrodeSet& layout);
ElectrodeSet read_electrodes_csv(std::istream& is);

/// step,label,warmup,<electrode ids...>; one row per time step.
void write_features_csv(std::ostream& os, const FeatureMatrix& fm);
FeatureMatrix read_features_csv(std::istream& is);

}  // namespace swrc
