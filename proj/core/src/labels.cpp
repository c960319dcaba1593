// SPDX-License-Identifier: Apache-2.0
#include "hpsed/labels.hpp"

#include "hpsed/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace hpsed {

std::string class_name(int label) {
  if (label < 0 || label >= kNumClasses) throw InvalidInput("class label out of range: " + std::to_string(label));
  return "Class" + std::to_string(label);
}

std::optional<int> class_index(std::string_view name) {
  constexpr std::string_view prefix = "Class";
  if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string_view digits = name.substr(prefix.size());
  int value = -1;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  if (value < 0 || value >= kNumClasses || std::to_string(value) != digits) return std::nullopt;
  return value;
}

StrongLabelGrid rasterize_events(const EventList& events, int frames) {
  StrongLabelGrid grid = StrongLabelGrid::Zero(frames, kNumClasses);
  for (const Event& e : events) {
    if (e.label < 0 || e.label >= kNumClasses) throw InvalidInput("rasterize_events: bad class label");
    if (!(e.offset > e.onset)) continue;
    const int first = std::max(0, static_cast<int>(std::floor(e.onset / kFrameDuration)));
    for (int t = first; t < frames; ++t) {
      const double start = t * kFrameDuration, end = (t + 1) * kFrameDuration;
      if (start >= e.offset) break;
      if (end > e.onset) grid(t, e.label) = 1.0f;
    }
  }
  return grid;
}

WeakLabel weak_from_events(const EventList& events) {
  WeakLabel w = WeakLabel::Zero(kNumClasses);
  for (const Event& e : events) {
    if (e.label < 0 || e.label >= kNumClasses) throw InvalidInput("weak_from_events: bad class label");
    w(e.label) = 1.0f;
  }
  return w;
}

WeakLabel weak_from_grid(const StrongLabelGrid& grid) { return grid.colwise().maxCoeff().transpose(); }

}  // namespace hpsed
