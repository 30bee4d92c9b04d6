#include "swrc/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace swrc {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw FormatError("snapshot: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return is;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("expected a number for ") + what + ", got '" + s + "'");
  }
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(std::string("expected an integer for ") + what + ", got '" + s + "'");
  }
}

}  // namespace

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_snapshot(std::ostream& os, const Snapshot& frame) {
  if (frame.sx.size() != static_cast<std::size_t>(frame.nx) * static_cast<std::size_t>(frame.ny)) {
    throw FormatError("snapshot: data size does not match nx*ny");
  }
  os.write("SPNX", 4);
  put_u32(os, static_cast<std::uint32_t>(frame.nx));
  put_u32(os, static_cast<std::uint32_t>(frame.ny));
  put_u32(os, static_cast<std::uint32_t>(frame.frame_index));
  for (float f : frame.sx) put_u32(os, std::bit_cast<std::uint32_t>(f));
}

Snapshot read_snapshot(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4)) throw FormatError("snapshot: truncated header");
  if (std::memcmp(magic, "SPNX", 4) != 0) throw FormatError("snapshot: bad magic");
  Snapshot s;
  s.nx = static_cast<int>(get_u32(is));
  s.ny = static_cast<int>(get_u32(is));
  s.frame_index = static_cast<int>(get_u32(is));
  s.step = -1;
  s.sx.resize(static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny));
  for (float& f : s.sx) {
    try {
      f = std::bit_cast<float>(get_u32(is));
    } catch (const FormatError&) {
      throw FormatError("snapshot: truncated data");
    }
  }
  return s;
}

void write_snapshot_file(const std::filesystem::path& path, const Snapshot& frame) {
  auto os = open_out(path);
  write_snapshot(os, frame);
}

Snapshot read_snapshot_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_snapshot(is);
}

std::array<std::uint8_t, 3> Image::pixel(int x, int y) const {
  const std::size_t o = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
  return {rgb[o], rgb[o + 1], rgb[o + 2]};
}

double percentile_abs(std::span<const double> values, double q) {
  if (values.empty()) return 0.0;
  std::vector<double> a(values.size());
  std::transform(values.begin(), values.end(), a.begin(), [](double v) { return std::abs(v); });
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(a.size() - 1)));
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
  return a[k];
}

Image render_diverging(std::span<const double> values, int width, int height) {
  for (double v : values) {
    if (!std::isfinite(v)) throw FormatError("render: non-finite value");
  }
  return render_diverging(values, width, height, percentile_abs(values));
}

Image render_diverging(std::span<const double> values, int width, int height, double scale) {
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw FormatError("render: value count does not match image size");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw FormatError("render: non-finite value");
  }
  if (!std::isfinite(scale)) throw FormatError("render: non-finite scale");
  Image img{width, height, std::vector<std::uint8_t>(values.size() * 3, 255)};
  if (scale <= 0.0) return img;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i] / scale, -1.0, 1.0);
    const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(v))));
    if (v > 0.0) {
      img.rgb[3 * i + 1] = fade;
      img.rgb[3 * i + 2] = fade;
    } else if (v < 0.0) {
      img.rgb[3 * i] = fade;
      img.rgb[3 * i + 1] = fade;
    }
  }
  return img;
}

void write_ppm(std::ostream& os, const Image& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

void write_ppm_file(const std::filesystem::path& path, const Image& img) {
  auto os = open_out(path);
  write_ppm(os, img);
}

Image read_ppm(std::istream& is) {
  std::string magic;
  int maxval = 0;
  Image img;
  if (!(is >> magic >> img.width >> img.height >> maxval) || magic != "P6" || maxval != 255) {
    throw FormatError("ppm: expected an 8-bit P6 header");
  }
  is.get();
  img.rgb.resize(3 * static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
  if (!is.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()))) {
    throw FormatError("ppm: truncated pixel data");
  }
  return img;
}

Image read_ppm_file(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_ppm(is);
}

Image render_weight_map(const ReadoutModel& model, const ElectrodeSet& layout, const CellRect& region) {
  if (model.w_out.size() != layout.n_o()) throw FormatError("render: weight count does not match layout");
  std::vector<double> grid(region.area(), 0.0);
  for (int k = 0; k < layout.n_o(); ++k) {
    const Cell c = layout.positions[static_cast<std::size_t>(k)];
    if (!region.contains(c)) throw FormatError("render: electrode outside region");
    grid[static_cast<std::size_t>(c.iy - region.y0) * static_cast<std::size_t>(region.w) +
         static_cast<std::size_t>(c.ix - region.x0)] = model.w_out(k);
  }
  const std::vector<double> w(model.w_out.data(), model.w_out.data() + model.w_out.size());
  return render_diverging(grid, region.w, region.h, percentile_abs(w));
}

Image render_snapshot(const Snapshot& frame) {
  std::vector<double> v(frame.sx.begin(), frame.sx.end());
  return render_diverging(v, frame.nx, frame.ny);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

void write_weights_csv(std::ostream& os, const ReadoutModel& model, const ElectrodeSet& layout) {
  if (model.w_out.size() != layout.n_o()) throw FormatError("weights: count does not match layout");
  os << "electrode,ix,iy,weight\n";
  for (int k = 0; k < layout.n_o(); ++k) {
    const Cell c = layout.positions[static_cast<std::size_t>(k)];
    os << k << ',' << c.ix << ',' << c.iy << ',' << format_g9(model.w_out(k)) << '\n';
  }
}

WeightTable read_weights_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) != std::vector<std::string>{"electrode", "ix", "iy", "weight"}) {
    throw FormatError("weights: expected header 'electrode,ix,iy,weight'");
  }
  WeightTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw FormatError("weights: expected 4 fields per row");
    t.cells.push_back({parse_int(f[1], "ix"), parse_int(f[2], "iy")});
    t.weights.push_back(parse_double(f[3], "weight"));
  }
  return t;
}

void write_electrodes_csv(std::ostream& os, const ElectrodeSet& layout) {
  os << "ix,iy\n";
  for (const Cell& c : layout.positions) os << c.ix << ',' << c.iy << '\n';
}

ElectrodeSet read_electrodes_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || split_csv_line(line) != std::vector<std::string>{"ix", "iy"}) {
    throw FormatError("electrodes: expected header 'ix,iy'");
  }
  ElectrodeSet set;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw FormatError("electrodes: expected 2 fields per row");
    set.positions.push_back({parse_int(f[0], "ix"), parse_int(f[1], "iy")});
  }
  return set;
}

void write_features_csv(std::ostream& os, const FeatureMatrix& fm) {
  os << "step,label,warmup";
  for (Eigen::Index r = 0; r < fm.electrodes(); ++r) {
    os << ",e" << (fm.electrode_ids.empty() ? static_cast<int>(r) : fm.electrode_ids[static_cast<std::size_t>(r)]);
  }
  os << '\n';
  for (Eigen::Index n = 0; n < fm.steps(); ++n) {
    const auto un = static_cast<std::size_t>(n);
    os << n << ',' << (un < fm.step_labels.size() ? to_string(fm.step_labels[un]) : "SIN") << ','
       << (un < fm.warmup_mask.size() && fm.warmup_mask[un] ? 1 : 0);
    for (Eigen::Index r = 0; r < fm.electrodes(); ++r) os << ',' << format_g9(fm.values(r, n));
    os << '\n';
  }
}

FeatureMatrix read_features_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("features: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "step" || header[1] != "label" || header[2] != "warmup") {
    throw FormatError("features: expected header 'step,label,warmup,...'");
  }
  FeatureMatrix fm;
  for (std::size_t k = 3; k < header.size(); ++k) {
    if (header[k].empty() || header[k][0] != 'e') throw FormatError("features: bad electrode column '" + header[k] + "'");
    fm.electrode_ids.push_back(parse_int(header[k].substr(1), "electrode id"));
  }
  std::vector<std::vector<double>> cols;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw FormatError("features: row width does not match header");
    fm.step_labels.push_back(waveform_from_string(f[1]));
    fm.warmup_mask.push_back(f[2] == "1");
    std::vector<double> col;
    for (std::size_t k = 3; k < f.size(); ++k) col.push_back(parse_double(f[k], "feature"));
    cols.push_back(std::move(col));
  }
  fm.values.resize(static_cast<Eigen::Index>(fm.electrode_ids.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t n = 0; n < cols.size(); ++n) {
    for (std::size_t r = 0; r < cols[n].size(); ++r) {
      fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(n)) = cols[n][r];
    }
  }
  // Section offsets are not stored; rebuild them from label changes.
  fm.step_offset.resize(fm.step_labels.size());
  for (std::size_t n = 0; n < fm.step_labels.size(); ++n) {
    fm.step_offset[n] = (n == 0 || fm.step_labels[n] != fm.step_labels[n - 1]) ? 0 : fm.step_offset[n - 1] + 1;
  }
  return fm;
}

}  // namespace swrc
