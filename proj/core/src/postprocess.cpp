// SPDX-License-Identifier: Apache-2.0
#include "hpsed/postprocess.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace hpsed {

void DecodingConfig::validate() const {
  if (median_window < 1 || median_window % 2 == 0) throw InvalidInput("median window must be odd and positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidInput("threshold must lie in (0, 1)");
  if (!(frame_duration > 0.0)) throw InvalidInput("frame duration must be positive");
}

std::vector<float> median_filter_1d(std::span<const float> seq, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidInput("median window must be odd and positive");
  const auto n = static_cast<std::ptrdiff_t>(seq.size());
  std::vector<float> out(seq.size());
  if (n == 0) return out;
  const std::ptrdiff_t half = window / 2;
  // Half-sample symmetric reflection: ... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...
  auto at = [&](std::ptrdiff_t i) {
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return seq[static_cast<std::size_t>(i < n ? i : period - 1 - i)];
  };
  std::vector<float> buf(static_cast<std::size_t>(window));
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    for (std::ptrdiff_t k = -half; k <= half; ++k) buf[static_cast<std::size_t>(k + half)] = at(t + k);
    std::nth_element(buf.begin(), buf.begin() + half, buf.end());
    out[static_cast<std::size_t>(t)] = buf[static_cast<std::size_t>(half)];
  }
  return out;
}

EventList decode_events(const Grid& strong, const DecodingConfig& config, const Vec* weak) {
  config.validate();
  if (weak && weak->size() != strong.cols()) throw InvalidInput("weak vector length does not match class count");
  EventList events;
  const auto frames = strong.rows();
  const float tau = static_cast<float>(config.threshold);
  std::vector<float> column(static_cast<std::size_t>(frames));
  for (Eigen::Index c = 0; c < strong.cols(); ++c) {
    if (config.weak_gate && weak && (*weak)(c) < *config.weak_gate) continue;
    std::vector<float> active;
    if (config.filter_input == FilterInput::Binary) {
      for (Eigen::Index t = 0; t < frames; ++t) column[static_cast<std::size_t>(t)] = strong(t, c) > tau ? 1.f : 0.f;
      active = median_filter_1d(column, config.median_window);
    } else {
      for (Eigen::Index t = 0; t < frames; ++t) column[static_cast<std::size_t>(t)] = strong(t, c);
      active = median_filter_1d(column, config.median_window);
      for (auto& v : active) v = v > tau ? 1.f : 0.f;
    }
    for (Eigen::Index t = 0; t < frames;) {
      if (active[static_cast<std::size_t>(t)] == 0.f) {
        ++t;
        continue;
      }
      Eigen::Index end = t;
      while (end + 1 < frames && active[static_cast<std::size_t>(end + 1)] != 0.f) ++end;
      const double onset = static_cast<double>(t) * config.frame_duration;
      const double offset = std::min(static_cast<double>(end + 1) * config.frame_duration, kClipSeconds);
      if (offset > onset) events.push_back({static_cast<int>(c), onset, offset});
      t = end + 1;
    }
  }
  return events;
}

void write_event_table(std::ostream& out, const ClipEvents& events) {
  char line[64];
  for (const auto& [name, list] : events) {
    for (const auto& e : list) {
      std::snprintf(line, sizeof line, "\t%.3f\t%.3f\t", e.onset, e.offset);
      out << name << line << class_name(e.label) << '\n';
    }
  }
}

void write_event_table(const std::string& path, const ClipEvents& events) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_event_table(out, events);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace hpsed
