#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swrc/geometry.hpp"
#include "swrc/layout.hpp"
#include "swrc/llg.hpp"
#include "swrc/readout.hpp"

namespace swrc {

/// Malformed config text; carries the 1-based line and column.
class SyntaxError : public ConfigError {
 public:
  SyntaxError(int line, int column, const std::string& what);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

/// A physical quantity given without, or with the wrong, unit suffix.
class UnitError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Well-formed but unacceptable value, or an unknown key.
class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class Profile { kPaper, kFast };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

struct ScheduleParams {
  int n_train_sections = 15;
  int n_test_sections = 8;
  int section_len = 1280;
  double t0 = 0.01e-9;       // s
  double frequency = 2.5e9;  // Hz

  double period() const { return 1.0 / frequency; }
};

struct ReadoutParams {
  int window_steps = 0;  // 0: round(T0 / t0)
  AmplitudeMode mode = AmplitudeMode::kRms;
  double rcond = 1e-10;
  double ridge = 0.0;
  int column_stride = 0;              // 0: 1, or the smallest stride keeping N_o * columns <= max_train_values
  long max_train_values = 50'000'000;
  int transient_steps = 300;
};

struct ExperimentConfig {
  Profile profile = Profile::kPaper;
  GridSpec grid;
  MaterialParams material;
  IntegratorConfig integrator;
  long relax_max_steps = 20000;
  double relax_tolerance = 1e4;  // 1/s
  ScheduleParams schedule;
  ReadoutParams readout;

  std::uint64_t seed = 1;
  int repeats = 10;
  int threads = 1;
  Arrangement arrangement = Arrangement::kGrid;
  int n_o = 81;
  std::vector<int> n_o_list{4, 16, 25, 54, 81, 144, 196, 289};
  std::vector<Arrangement> sweep_arrangements{Arrangement::kGrid, Arrangement::kCircle, Arrangement::kRandom};
  std::vector<int> compartments{1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> compartment_n_o{4, 16, 25, 81, 196};
  std::pair<double, double> train_frequencies{2.4e9, 2.6e9};
  std::vector<double> test_frequencies;  // Hz
  Waveform snapshot_waveform = Waveform::kSin;
  int snapshot_first_step = 0;
  int snapshot_count = 10;
  int snapshot_stride = 1;
  std::filesystem::path out_dir = "out";

  /// Window length in macro steps for a drive at `frequency` (Hz).
  int window_steps(double frequency) const;
  int window_steps() const { return window_steps(schedule.frequency); }
  std::vector<int> snapshot_steps() const;
};

/// Defaults for a profile: paper (220x220 at 10 nm, 15/8 sections) or fast (110x110 at 20 nm,
/// 8/4 sections, 5 substeps).
ExperimentConfig default_config(Profile profile);

struct ConfigOverrides {
  std::optional<Profile> profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> threads;
};

/// Parses INI-style text. The profile comes from overrides, then [experiment] profile, then
/// the paper profile; file keys override profile defaults and overrides win over both.
ExperimentConfig parse_config_text(const std::string& text, const ConfigOverrides& overrides = {});
ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Throws ValidationError or StabilityError.
void validate(const ExperimentConfig& config);

/// Complete key listing that parses back to the same config.
std::string resolved_text(const ExperimentConfig& config);

/// 64-bit FNV-1a of resolved_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::string version_string();

/// Derived stream seed, independent for distinct (base, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Writes config.resolved (provenance header + resolved keys) into the output directory.
void write_resolved(const ExperimentConfig& config, const std::vector<std::string>& provenance_lines = {});

}  // namespace swrc
