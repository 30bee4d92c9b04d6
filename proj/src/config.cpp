#include "swrc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#ifndef SWRC_VERSION
#define SWRC_VERSION "0.0.0"
#endif

namespace swrc {

SyntaxError::SyntaxError(int line, int column, const std::string& what)
    : ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line), column_(column) {}

std::string to_string(Profile p) { return p == Profile::kFast ? "fast" : "paper"; }

Profile profile_from_string(const std::string& s) {
  if (s == "paper") return Profile::kPaper;
  if (s == "fast") return Profile::kFast;
  throw ValidationError("unknown profile '" + s + "' (expected paper or fast)");
}

int ExperimentConfig::window_steps(double frequency) const {
  if (readout.window_steps > 0) return readout.window_steps;
  return std::max(1, static_cast<int>(std::lround(1.0 / (frequency * schedule.t0))));
}

std::vector<int> ExperimentConfig::snapshot_steps() const {
  std::vector<int> out;
  for (int k = 0; k < snapshot_count; ++k) out.push_back(snapshot_first_step + k * snapshot_stride);
  return out;
}

namespace {

std::vector<double> frequency_range(double lo, double hi, double step) {
  std::vector<double> out;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e6) / 1e6);
  return out;
}

}  // namespace

ExperimentConfig default_config(Profile profile) {
  ExperimentConfig c;
  c.profile = profile;
  c.material.h_bias_x = 1000.0;
  c.test_frequencies = frequency_range(2.2, 2.8, 0.05);
  for (double& f : c.test_frequencies) f *= 1e9;
  if (profile == Profile::kFast) {
    c.grid.nx = c.grid.ny = 110;
    c.grid.cell_size = 20e-9;
    c.integrator.substeps = 5;
    c.schedule.n_train_sections = 8;
    c.schedule.n_test_sections = 4;
    c.n_o = 64;
    c.n_o_list = {4, 16, 64, 144};
  }
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Context for messages about one key occurrence.
struct Where {
  std::string key;
  int line = 0;

  std::string str() const { return "'" + key + "' (line " + std::to_string(line) + ")"; }
};

bool has_unit_text(const std::string& rest) {
  return std::any_of(rest.begin(), rest.end(), [](unsigned char ch) { return std::isalpha(ch) || ch == '/'; });
}

double to_double(const std::string& v, const Where& w, bool physical) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec == std::errc() && r.ptr == v.data() + v.size() && std::isfinite(out)) return out;
  if (r.ec == std::errc() && physical && has_unit_text(std::string(r.ptr, v.data() + v.size()))) {
    throw UnitError("units belong in the key name, not the value: " + w.str() + " = " + v);
  }
  throw ValidationError("expected a finite number for " + w.str() + ", got '" + v + "'");
}

long long to_integer(const std::string& v, const Where& w) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ValidationError("expected an integer for " + w.str() + ", got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v, const Where& w) {
  const long long x = to_integer(v, w);
  if (x < -2147483647LL || x > 2147483647LL) throw ValidationError("value out of range for " + w.str());
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& v, const Where& w) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ValidationError("expected a non-negative integer for " + w.str() + ", got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const Where& w) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("expected true or false for " + w.str() + ", got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, const Where& w) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(to_int(item, w));
  return out;
}

// Comma list, or "start:stop:step", in GHz.
std::vector<double> to_frequency_list(const std::string& v, const Where& w) {
  std::vector<double> out;
  if (v.find(':') != std::string::npos) {
    std::vector<double> p;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ':')) p.push_back(to_double(trim(item), w, true));
    if (p.size() != 3 || p[2] <= 0.0 || p[1] < p[0]) {
      throw ValidationError("expected start:stop:step with step > 0 for " + w.str());
    }
    out = frequency_range(p[0], p[1], p[2]);
  } else {
    for (const auto& item : split_list(v)) out.push_back(to_double(item, w, true));
  }
  for (double& f : out) f *= 1e9;
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string join_ghz(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i] / 1e9);
  return s;
}

struct KeySpec {
  const char* section;
  const char* name;
  bool physical;  // carries a unit suffix
  std::function<void(ExperimentConfig&, const std::string&, const Where&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define SWRC_NUM(sec, key, field, scale)                                                             \
  KeySpec {                                                                                          \
    sec, key, true, [](ExperimentConfig& c, const std::string& v, const Where& w) {                  \
      c.field = to_double(v, w, true) * (scale);                                                     \
    },                                                                                               \
        [](const ExperimentConfig& c) { return fmt(c.field / (scale)); }                             \
  }
#define SWRC_REAL(sec, key, field)                                                                   \
  KeySpec {                                                                                          \
    sec, key, false, [](ExperimentConfig& c, const std::string& v, const Where& w) {                 \
      c.field = to_double(v, w, false);                                                              \
    },                                                                                               \
        [](const ExperimentConfig& c) { return fmt(c.field); }                                       \
  }
#define SWRC_INT(sec, key, field)                                                                    \
  KeySpec {                                                                                          \
    sec, key, false, [](ExperimentConfig& c, const std::string& v, const Where& w) {                 \
      c.field = static_cast<decltype(c.field)>(to_integer(v, w));                                    \
    },                                                                                               \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                            \
  }
#define SWRC_BOOL(sec, key, field)                                                                   \
  KeySpec {                                                                                          \
    sec, key, false, [](ExperimentConfig& c, const std::string& v, const Where& w) {                 \
      c.field = to_bool(v, w);                                                                       \
    },                                                                                               \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }            \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      SWRC_INT("geometry", "nx", grid.nx),
      SWRC_INT("geometry", "ny", grid.ny),
      SWRC_NUM("geometry", "cell_size_nm", grid.cell_size, 1e-9),
      SWRC_NUM("geometry", "thickness_nm", grid.thickness, 1e-9),

      SWRC_NUM("material", "ms_kA_per_m", material.ms, 1e3),
      SWRC_NUM("material", "a_ex_pJ_per_m", material.a_ex, 1e-12),
      SWRC_NUM("material", "ku_high_kJ_per_m3", material.ku_high, 1e3),
      SWRC_NUM("material", "ku_low_kJ_per_m3", material.ku_low, 1e3),
      SWRC_NUM("material", "h_ext_A_per_m", material.h_ext, 1.0),
      SWRC_NUM("material", "h_bias_x_A_per_m", material.h_bias_x, 1.0),
      SWRC_REAL("material", "alpha_interior", material.alpha_interior),
      SWRC_REAL("material", "alpha_damper", material.alpha_damper),
      SWRC_NUM("material", "damper_width_nm", material.damper_width, 1e-9),
      SWRC_NUM("material", "electrode_diameter_nm", material.electrode_diameter, 1e-9),

      SWRC_INT("integrator", "substeps", integrator.substeps),
      SWRC_NUM("integrator", "gamma_rad_per_s_T", integrator.gamma, 1.0),
      SWRC_BOOL("integrator", "renormalize", integrator.renormalize),
      SWRC_BOOL("integrator", "exchange", integrator.terms.exchange),
      SWRC_BOOL("integrator", "anisotropy", integrator.terms.anisotropy),
      SWRC_BOOL("integrator", "zeeman", integrator.terms.zeeman),
      SWRC_BOOL("integrator", "local_demag", integrator.terms.local_demag),
      SWRC_INT("integrator", "relax_max_steps", relax_max_steps),
      SWRC_NUM("integrator", "relax_tolerance_per_s", relax_tolerance, 1.0),

      SWRC_INT("schedule", "n_train_sections", schedule.n_train_sections),
      SWRC_INT("schedule", "n_test_sections", schedule.n_test_sections),
      SWRC_INT("schedule", "section_len_steps", schedule.section_len),
      SWRC_NUM("schedule", "t0_ns", schedule.t0, 1e-9),
      SWRC_NUM("schedule", "frequency_GHz", schedule.frequency, 1e9),

      SWRC_INT("readout", "window_steps", readout.window_steps),
      KeySpec{"readout", "amplitude", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) {
                if (v == "rms") c.readout.mode = AmplitudeMode::kRms;
                else if (v == "peak") c.readout.mode = AmplitudeMode::kTrailingPeak;
                else throw ValidationError("expected rms or peak for " + w.str() + ", got '" + v + "'");
              },
              [](const ExperimentConfig& c) {
                return std::string(c.readout.mode == AmplitudeMode::kRms ? "rms" : "peak");
              }},
      SWRC_REAL("readout", "rcond", readout.rcond),
      SWRC_REAL("readout", "ridge", readout.ridge),
      SWRC_INT("readout", "column_stride", readout.column_stride),
      SWRC_INT("readout", "max_train_values", readout.max_train_values),
      SWRC_INT("readout", "transient_steps", readout.transient_steps),

      KeySpec{"experiment", "profile", false, [](ExperimentConfig&, const std::string&, const Where&) {},
              [](const ExperimentConfig& c) { return to_string(c.profile); }},
      KeySpec{"experiment", "seed", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) { c.seed = to_u64(v, w); },
              [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      SWRC_INT("experiment", "repeats", repeats),
      SWRC_INT("experiment", "threads", threads),
      KeySpec{"experiment", "arrangement", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) {
                try {
                  c.arrangement = arrangement_from_string(v);
                } catch (const ConfigError& e) {
                  throw ValidationError(w.str() + ": " + e.what());
                }
              },
              [](const ExperimentConfig& c) {
                std::string s = to_string(c.arrangement);
                std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
                return s;
              }},
      SWRC_INT("experiment", "n_o", n_o),
      KeySpec{"experiment", "n_o_list", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) { c.n_o_list = to_int_list(v, w); },
              [](const ExperimentConfig& c) { return join_ints(c.n_o_list); }},
      KeySpec{"experiment", "sweep_arrangements", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) {
                c.sweep_arrangements.clear();
                for (const auto& item : split_list(v)) {
                  try {
                    c.sweep_arrangements.push_back(arrangement_from_string(item));
                  } catch (const ConfigError& e) {
                    throw ValidationError(w.str() + ": " + e.what());
                  }
                }
              },
              [](const ExperimentConfig& c) {
                std::string s;
                for (std::size_t i = 0; i < c.sweep_arrangements.size(); ++i) {
                  std::string a = to_string(c.sweep_arrangements[i]);
                  std::transform(a.begin(), a.end(), a.begin(), [](unsigned char ch) { return std::tolower(ch); });
                  s += (i ? "," : "") + a;
                }
                return s;
              }},
      KeySpec{"experiment", "compartments", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) { c.compartments = to_int_list(v, w); },
              [](const ExperimentConfig& c) { return join_ints(c.compartments); }},
      KeySpec{"experiment", "compartment_n_o", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) { c.compartment_n_o = to_int_list(v, w); },
              [](const ExperimentConfig& c) { return join_ints(c.compartment_n_o); }},
      KeySpec{"experiment", "train_frequencies_GHz", true,
              [](ExperimentConfig& c, const std::string& v, const Where& w) {
                const auto f = to_frequency_list(v, w);
                if (f.size() != 2) throw ValidationError("expected two frequencies for " + w.str());
                c.train_frequencies = {f[0], f[1]};
              },
              [](const ExperimentConfig& c) {
                return join_ghz({c.train_frequencies.first, c.train_frequencies.second});
              }},
      KeySpec{"experiment", "test_frequencies_GHz", true,
              [](ExperimentConfig& c, const std::string& v, const Where& w) { c.test_frequencies = to_frequency_list(v, w); },
              [](const ExperimentConfig& c) { return join_ghz(c.test_frequencies); }},
      KeySpec{"experiment", "snapshot_waveform", false,
              [](ExperimentConfig& c, const std::string& v, const Where& w) {
                try {
                  c.snapshot_waveform = waveform_from_string(v);
                } catch (const std::exception& e) {
                  throw ValidationError(w.str() + ": " + e.what());
                }
              },
              [](const ExperimentConfig& c) {
                return std::string(c.snapshot_waveform == Waveform::kSin ? "sin" : "square");
              }},
      SWRC_INT("experiment", "snapshot_first_step", snapshot_first_step),
      SWRC_INT("experiment", "snapshot_count", snapshot_count),
      SWRC_INT("experiment", "snapshot_stride_steps", snapshot_stride),
      KeySpec{"experiment", "out_dir", false,
              [](ExperimentConfig& c, const std::string& v, const Where&) { c.out_dir = v; },
              [](const ExperimentConfig& c) { return c.out_dir.string(); }},
  };
  return table;
}

#undef SWRC_NUM
#undef SWRC_REAL
#undef SWRC_INT
#undef SWRC_BOOL

// Base quantity name of a unit-suffixed key, e.g. "cell_size" for "cell_size_nm".
std::string quantity_base(const std::string& key) {
  static const char* suffixes[] = {"_nm", "_kA_per_m", "_pJ_per_m", "_kJ_per_m3", "_A_per_m", "_rad_per_s_T",
                                   "_per_s", "_ns", "_GHz"};
  for (const char* s : suffixes) {
    const std::string suf(s);
    if (key.size() > suf.size() && key.compare(key.size() - suf.size(), suf.size(), suf) == 0) {
      return key.substr(0, key.size() - suf.size());
    }
  }
  return key;
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : key_table()) {
    if (section == k.section && key == k.name) return &k;
  }
  return nullptr;
}

// A key naming a known physical quantity with a missing or different unit suffix.
const KeySpec* same_quantity(const std::string& section, const std::string& key) {
  for (const auto& k : key_table()) {
    if (!k.physical || section != k.section) continue;
    const std::string base = quantity_base(k.name);
    if (key == base || key.rfind(base + "_", 0) == 0) return &k;
  }
  return nullptr;
}

struct Entry {
  std::string section, key, value;
  int line = 0;
};

std::vector<Entry> tokenize(const std::string& text) {
  static const std::vector<std::string> sections{"geometry", "material", "integrator", "schedule", "readout", "experiment"};
  std::vector<Entry> out;
  std::map<std::pair<std::string, std::string>, int> seen;
  std::istringstream in(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const int indent = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) {
        throw SyntaxError(line_no, indent + static_cast<int>(line.size()), "missing ']' in section header");
      }
      if (!trim(line.substr(close + 1)).empty()) {
        throw SyntaxError(line_no, indent + static_cast<int>(close) + 1, "unexpected text after section header");
      }
      section = trim(line.substr(1, close - 1));
      if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
        throw ValidationError("unknown section [" + section + "] on line " + std::to_string(line_no));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SyntaxError(line_no, indent, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw SyntaxError(line_no, indent, "missing key before '='");
    const auto bad = key.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_");
    if (bad != std::string::npos) throw SyntaxError(line_no, indent + static_cast<int>(bad), "invalid character in key");
    if (section.empty()) throw SyntaxError(line_no, indent, "key '" + key + "' appears before any [section]");
    std::string value = line.substr(eq + 1);
    for (std::size_t p = 0; p < value.size(); ++p) {
      if ((value[p] == '#' || value[p] == ';') && (p == 0 || value[p - 1] == ' ' || value[p - 1] == '\t')) {
        value.resize(p);
        break;
      }
    }
    value = trim(value);
    if (value.empty()) {
      throw SyntaxError(line_no, indent + static_cast<int>(eq) + 1, "missing value for '" + key + "'");
    }
    const auto [it, fresh] = seen.emplace(std::make_pair(section, key), line_no);
    if (!fresh) {
      throw ValidationError("duplicate key '" + key + "' on line " + std::to_string(line_no) + " (first set on line " +
                            std::to_string(it->second) + ")");
    }
    out.push_back({section, key, value, line_no});
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides) {
  const auto entries = tokenize(text);
  Profile profile = Profile::kPaper;
  for (const auto& e : entries) {
    if (e.section == "experiment" && e.key == "profile") profile = profile_from_string(e.value);
  }
  if (overrides.profile) profile = *overrides.profile;
  ExperimentConfig c = default_config(profile);
  for (const auto& e : entries) {
    const Where w{e.key, e.line};
    const KeySpec* spec = find_key(e.section, e.key);
    if (!spec) {
      if (const KeySpec* q = same_quantity(e.section, e.key)) {
        throw UnitError("key " + w.str() + " needs the unit suffix of '" + q->name + "'");
      }
      throw ValidationError("unknown key " + w.str() + " in [" + e.section + "]");
    }
    spec->set(c, e.value, w);
  }
  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.out_dir) c.out_dir = *overrides.out_dir;
  if (overrides.threads) c.threads = *overrides.threads;
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), overrides);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  require(c.grid.cell_size > 0 && c.grid.thickness > 0, "cell_size_nm and thickness_nm must be positive");
  require(c.material.ms > 0, "ms_kA_per_m must be positive");
  require(c.material.a_ex >= 0, "a_ex_pJ_per_m must be non-negative");
  require(c.material.ku_high >= 0 && c.material.ku_low >= 0, "anisotropy levels must be non-negative");
  require(c.material.alpha_interior > 0 && c.material.alpha_damper > 0, "damping constants must be positive");
  require(c.material.damper_width >= 0 && c.material.electrode_diameter > 0,
          "damper_width_nm must be non-negative and electrode_diameter_nm positive");
  require(c.integrator.substeps >= 1, "substeps must be at least 1");
  require(c.integrator.gamma > 0, "gamma_rad_per_s_T must be positive");
  require(c.relax_max_steps >= 0, "relax_max_steps must be non-negative");
  require(c.relax_tolerance > 0, "relax_tolerance_per_s must be positive");
  require(c.schedule.n_train_sections >= 1, "n_train_sections must be at least 1");
  require(c.schedule.n_test_sections >= 1, "n_test_sections must be at least 1");
  require(c.schedule.t0 > 0, "t0_ns must be positive");
  require(c.schedule.frequency > 0, "frequency_GHz must be positive");
  require(c.readout.window_steps >= 0, "window_steps must be non-negative (0 selects one period)");
  require(c.schedule.section_len > c.window_steps(), "section_len_steps must exceed the envelope window");
  require(c.readout.rcond >= 0 && c.readout.rcond < 1, "rcond must be in [0, 1)");
  require(c.readout.ridge >= 0, "ridge must be non-negative");
  require(c.readout.column_stride >= 0, "column_stride must be non-negative (0 selects automatically)");
  require(c.readout.max_train_values >= 1, "max_train_values must be positive");
  require(c.readout.transient_steps >= 0, "transient_steps must be non-negative");
  require(c.repeats >= 1, "repeats must be at least 1");
  require(c.threads >= 1, "threads must be at least 1");
  require(c.n_o >= 1, "n_o must be positive");
  require(!c.n_o_list.empty(), "n_o_list must not be empty");
  for (int n : c.n_o_list) require(n >= 1, "n_o_list entries must be positive");
  require(!c.sweep_arrangements.empty(), "sweep_arrangements must not be empty");
  require(!c.compartments.empty(), "compartments must not be empty");
  for (int k : c.compartments) require(k >= 1 && k <= 9, "compartments must be in 1..9");
  require(!c.compartment_n_o.empty(), "compartment_n_o must not be empty");
  for (int n : c.compartment_n_o) require(n >= 1, "compartment_n_o entries must be positive");
  require(c.train_frequencies.first > 0 && c.train_frequencies.second > 0, "train frequencies must be positive");
  for (double f : c.test_frequencies) require(f > 0, "test frequencies must be positive");
  for (double f : {c.train_frequencies.first, c.train_frequencies.second}) {
    require(c.schedule.section_len > c.window_steps(f), "section_len_steps must exceed the envelope window at every frequency");
  }
  require(c.snapshot_first_step >= 0 && c.snapshot_count >= 0 && c.snapshot_stride >= 1,
          "snapshot steps must be non-negative with a positive stride");

  MaterialMap map;
  try {
    map = build_geometry(c.grid, c.material);
  } catch (const StabilityError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ValidationError(e.what());
  }
  IntegratorConfig ic = c.integrator;
  ic.macro_step = c.schedule.t0;
  check_stability(map, ic);
}

std::string resolved_text(const ExperimentConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : key_table()) {
    if (section != k.section) {
      section = k.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(c) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : resolved_text(c)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string version_string() { return "swrc " SWRC_VERSION; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

void write_resolved(const ExperimentConfig& c, const std::vector<std::string>& provenance_lines) {
  std::filesystem::create_directories(c.out_dir);
  std::ofstream os(c.out_dir / "config.resolved");
  if (!os) throw std::runtime_error("cannot write " + (c.out_dir / "config.resolved").string());
  os << "# version: " << version_string() << "\n# config_hash: " << config_hash(c) << '\n';
  for (const auto& line : provenance_lines) os << "# " << line << '\n';
  os << resolved_text(c);
}

}  // namespace swrc
