// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/types.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hpsed {

enum class FilterInput {
  Binary,         // threshold first, then filter 0/1 decisions
  Probabilities,  // filter raw probabilities, then threshold
};

struct DecodingConfig {
  double threshold = 0.5;
  int median_window = 7;
  double frame_duration = kFrameDuration;
  FilterInput filter_input = FilterInput::Binary;
  /// When set, classes whose clip-level probability is below this value
  /// produce no events.
  std::optional<double> weak_gate;

  /// Throws InvalidInput on an even or non-positive window or a threshold
  /// outside (0, 1).
  void validate() const;
};

/// Sliding median with half-sample symmetric padding at both ends.
/// Throws InvalidInput for an even or non-positive window.
std::vector<float> median_filter_1d(std::span<const float> seq, int window);

/// Events of one frames x classes probability grid, sorted by class then onset.
EventList decode_events(const Grid& strong, const DecodingConfig& config, const Vec* weak = nullptr);

/// Event lists keyed by clip filename.
using ClipEvents = std::map<std::string, EventList>;

/// One "filename<TAB>onset<TAB>offset<TAB>label" line per event, times with
/// three decimals.
void write_event_table(std::ostream& out, const ClipEvents& events);
void write_event_table(const std::string& path, const ClipEvents& events);

}  // namespace hpsed
