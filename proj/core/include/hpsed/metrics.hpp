// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/postprocess.hpp"
#include "hpsed/types.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace hpsed {

struct MatchConfig {
  double onset_collar = 0.200;
  double offset_collar_abs = 0.200;
  double offset_collar_ratio = 0.20;
  /// Absorbs binary floating-point error at the closed collar boundary.
  double slack = 1e-9;
};

struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  ClassCounts& operator+=(const ClassCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

using CountsPerClass = std::array<ClassCounts, kNumClasses>;

/// Closed-interval collar test; labels are not compared.
bool events_match(const Event& ref, const Event& est, const MatchConfig& config = {});

/// Greedy one-to-one matching per class. References are visited by onset;
/// each takes the earliest-onset unmatched estimate inside its collars.
/// Throws InvalidInput for an event with onset >= offset or a label outside
/// the vocabulary.
CountsPerClass match_events(const EventList& ref, const EventList& est, const MatchConfig& config = {});

/// 2 tp / (2 tp + fp + fn), or 0 when all counts are zero.
double f_score(const ClassCounts& counts);

struct ClassReport {
  int label = 0;
  ClassCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  bool present = false;  // appears in references or estimates
};

struct MetricReport {
  std::array<ClassReport, kNumClasses> classes;
  double macro_f = 0.0;
};

/// Counts pooled over every clip, then averaged over classes that occur in
/// either list. Clips missing from `estimates` count as empty.
MetricReport macro_f_score(const ClipEvents& references, const ClipEvents& estimates, const MatchConfig& config = {});

void write_text_report(std::ostream& out, const MetricReport& report);
/// One JSON record per class, then one for the macro average.
void write_jsonl_report(std::ostream& out, const MetricReport& report);

}  // namespace hpsed
