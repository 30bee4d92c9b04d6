#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace swrc {

enum class Waveform : std::uint8_t { kSin = 0, kSquare = 1 };

const char* to_string(Waveform w);
Waveform waveform_from_string(const std::string& s);

/// Sinusoidal anisotropy drive: mean + half-swing * cos(2 pi t / T0).
double ku_sin(double t, double period, double ku_high, double ku_low);

/// Square wave truncated to its first four odd Fourier harmonics.
double ku_square(double t, double period, double ku_high, double ku_low);

struct Section {
  Waveform label = Waveform::kSin;
  int length_steps = 0;
};

struct SectionSchedule {
  std::vector<Section> sections;
  double t0 = 0.01e-9;      // macro step, s
  double period = 0.4e-9;   // drive period T0, s
  double ku_high = 10e3;
  double ku_low = 1e3;
  std::uint64_t seed = 0;

  int total_steps() const;
  double duration() const { return total_steps() * t0; }
  /// Macro-step index at which section `k` starts.
  int section_start(std::size_t k) const;
  /// Per-macro-step labels, length total_steps().
  std::vector<Waveform> step_labels() const;
  /// Per-macro-step section index, length total_steps().
  std::vector<int> step_sections() const;
};

struct DriveSample {
  double ku = 0.0;
  Waveform label = Waveform::kSin;
  int section = 0;
};

/// Labels drawn i.i.d. uniform from {SIN, SQUARE} with a seeded Mersenne twister.
SectionSchedule build_schedule(int n_sections, int length_steps, double t0, double period,
                               std::uint64_t seed, double ku_high = 10e3, double ku_low = 1e3);

/// Drive value at time t; phase restarts at each section boundary.
/// Throws std::domain_error when t lies outside [0, duration].
DriveSample drive_at(const SectionSchedule& schedule, double t);

/// One "label length_steps" pair per line, preceded by a commented parameter line.
void write_schedule(std::ostream& os, const SectionSchedule& schedule);
SectionSchedule read_schedule(std::istream& is);

}  // namespace swrc
