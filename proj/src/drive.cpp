#include "swrc/drive.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "swrc/geometry.hpp"

namespace swrc {

const char* to_string(Waveform w) { return w == Waveform::kSin ? "SIN" : "SQUARE"; }

Waveform waveform_from_string(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "SIN") return Waveform::kSin;
  if (u == "SQUARE") return Waveform::kSquare;
  throw ConfigError("unknown waveform label '" + s + "'");
}

double ku_sin(double t, double period, double ku_high, double ku_low) {
  const double phase = 2.0 * std::numbers::pi * t / period;
  return 0.5 * (ku_high + ku_low) + 0.5 * (ku_high - ku_low) * std::cos(phase);
}

double ku_square(double t, double period, double ku_high, double ku_low) {
  const double phase = 2.0 * std::numbers::pi * t / period;
  const double series = std::cos(phase) - std::cos(3.0 * phase) / 3.0 + std::cos(5.0 * phase) / 5.0 -
                        std::cos(7.0 * phase) / 7.0;
  return 0.5 * (ku_high + ku_low) + 0.5 * (ku_high - ku_low) * series;
}

int SectionSchedule::total_steps() const {
  int total = 0;
  for (const auto& s : sections) total += s.length_steps;
  return total;
}

int SectionSchedule::section_start(std::size_t k) const {
  int start = 0;
  for (std::size_t i = 0; i < k && i < sections.size(); ++i) start += sections[i].length_steps;
  return start;
}

std::vector<Waveform> SectionSchedule::step_labels() const {
  std::vector<Waveform> out;
  out.reserve(static_cast<std::size_t>(total_steps()));
  for (const auto& s : sections) out.insert(out.end(), static_cast<std::size_t>(s.length_steps), s.label);
  return out;
}

std::vector<int> SectionSchedule::step_sections() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(total_steps()));
  for (std::size_t k = 0; k < sections.size(); ++k) {
    out.insert(out.end(), static_cast<std::size_t>(sections[k].length_steps), static_cast<int>(k));
  }
  return out;
}

SectionSchedule build_schedule(int n_sections, int length_steps, double t0, double period,
                               std::uint64_t seed, double ku_high, double ku_low) {
  if (n_sections < 1) throw ConfigError("schedule needs at least one section");
  if (length_steps < 1) throw ConfigError("section length must be positive");
  if (!(t0 > 0.0) || !(period > 0.0)) throw ConfigError("t0 and period must be positive");
  SectionSchedule s;
  s.t0 = t0;
  s.period = period;
  s.ku_high = ku_high;
  s.ku_low = ku_low;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_sections; ++k) {
    // Top bit of a 64-bit draw: portable, unlike std::bernoulli_distribution.
    const bool square = (rng() >> 63) != 0;
    s.sections.push_back({square ? Waveform::kSquare : Waveform::kSin, length_steps});
  }
  return s;
}

DriveSample drive_at(const SectionSchedule& schedule, double t) {
  const double span = schedule.duration();
  // Allow a few ulps of slack so RK stages at the final substep stay in range.
  const double slack = 1e-9 * schedule.t0;
  if (!(t >= -slack) || !(t <= span + slack) || schedule.sections.empty()) {
    throw std::domain_error("drive_at: t=" + std::to_string(t) + " outside schedule span [0, " +
                            std::to_string(span) + "]");
  }
  double start = 0.0;
  std::size_t k = 0;
  for (; k + 1 < schedule.sections.size(); ++k) {
    const double end = start + schedule.sections[k].length_steps * schedule.t0;
    if (t < end) break;
    start = end;
  }
  const Section& sec = schedule.sections[k];
  const double local = t - start;
  const double ku = sec.label == Waveform::kSin
                        ? ku_sin(local, schedule.period, schedule.ku_high, schedule.ku_low)
                        : ku_square(local, schedule.period, schedule.ku_high, schedule.ku_low);
  return {ku, sec.label, static_cast<int>(k)};
}

void write_schedule(std::ostream& os, const SectionSchedule& schedule) {
  os.precision(17);
  os << "# t0_s " << schedule.t0 << " period_s " << schedule.period << " ku_high " << schedule.ku_high
     << " ku_low " << schedule.ku_low << " seed " << schedule.seed << '\n';
  for (const auto& s : schedule.sections) os << to_string(s.label) << ' ' << s.length_steps << '\n';
}

SectionSchedule read_schedule(std::istream& is) {
  SectionSchedule s;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash;
      while (ls >> key) {
        if (key == "t0_s") ls >> s.t0;
        else if (key == "period_s") ls >> s.period;
        else if (key == "ku_high") ls >> s.ku_high;
        else if (key == "ku_low") ls >> s.ku_low;
        else if (key == "seed") ls >> s.seed;
      }
      continue;
    }
    std::string label;
    int len = 0;
    if (!(ls >> label >> len) || len < 1) {
      throw ConfigError("schedule line " + std::to_string(line_no) + ": expected '<label> <length_steps>'");
    }
    s.sections.push_back({waveform_from_string(label), len});
  }
  return s;
}

}  // namespace swrc
