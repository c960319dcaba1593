// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace hpsed {

/// "Class0" ... "Class9".
std::string class_name(int label);
std::optional<int> class_index(std::string_view name);

/// Frame t is active for class c iff [t*d, (t+1)*d) overlaps a class-c event
/// by a positive amount, d = kFrameDuration.
StrongLabelGrid rasterize_events(const EventList& events, int frames = kLabelFrames);

WeakLabel weak_from_events(const EventList& events);

/// Column-wise max of a label grid.
WeakLabel weak_from_grid(const StrongLabelGrid& grid);

}  // namespace hpsed
