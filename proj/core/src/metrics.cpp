// SPDX-License-Identifier: Apache-2.0
#include "hpsed/metrics.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace hpsed {

bool events_match(const Event& ref, const Event& est, const MatchConfig& config) {
  const double offset_collar =
      std::max(config.offset_collar_abs, config.offset_collar_ratio * (ref.offset - ref.onset));
  return std::abs(est.onset - ref.onset) <= config.onset_collar + config.slack &&
         std::abs(est.offset - ref.offset) <= offset_collar + config.slack;
}

namespace {

void check(const Event& e) {
  if (e.label < 0 || e.label >= kNumClasses) throw InvalidInput("event label out of range");
  if (!(e.onset < e.offset)) throw InvalidInput("event onset must precede its offset");
}

std::vector<const Event*> of_class(const EventList& events, int label) {
  std::vector<const Event*> out;
  for (const auto& e : events)
    if (e.label == label) out.push_back(&e);
  std::stable_sort(out.begin(), out.end(), [](const Event* a, const Event* b) {
    return a->onset != b->onset ? a->onset < b->onset : a->offset < b->offset;
  });
  return out;
}

}  // namespace

CountsPerClass match_events(const EventList& ref, const EventList& est, const MatchConfig& config) {
  for (const auto& e : ref) check(e);
  for (const auto& e : est) check(e);
  CountsPerClass counts{};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto refs = of_class(ref, c);
    const auto ests = of_class(est, c);
    std::vector<bool> used(ests.size(), false);
    long tp = 0;
    for (const Event* r : refs) {
      for (std::size_t j = 0; j < ests.size(); ++j) {
        if (!used[j] && events_match(*r, *ests[j], config)) {
          used[j] = true;
          ++tp;
          break;
        }
      }
    }
    counts[static_cast<std::size_t>(c)] = {tp, static_cast<long>(ests.size()) - tp,
                                           static_cast<long>(refs.size()) - tp};
  }
  return counts;
}

double f_score(const ClassCounts& counts) {
  const long denom = 2 * counts.tp + counts.fp + counts.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(counts.tp) / static_cast<double>(denom);
}

MetricReport macro_f_score(const ClipEvents& references, const ClipEvents& estimates, const MatchConfig& config) {
  CountsPerClass total{};
  const EventList empty;
  auto accumulate = [&](const EventList& r, const EventList& e) {
    const auto counts = match_events(r, e, config);
    for (std::size_t c = 0; c < total.size(); ++c) total[c] += counts[c];
  };
  for (const auto& [clip, ref] : references) {
    const auto it = estimates.find(clip);
    accumulate(ref, it == estimates.end() ? empty : it->second);
  }
  for (const auto& [clip, est] : estimates)
    if (!references.count(clip)) accumulate(empty, est);

  MetricReport report;
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& cr = report.classes[static_cast<std::size_t>(c)];
    const auto& k = total[static_cast<std::size_t>(c)];
    cr.label = c;
    cr.counts = k;
    cr.present = k.tp + k.fp + k.fn > 0;
    cr.precision = k.tp + k.fp > 0 ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fp) : 0.0;
    cr.recall = k.tp + k.fn > 0 ? static_cast<double>(k.tp) / static_cast<double>(k.tp + k.fn) : 0.0;
    cr.f = f_score(k);
    if (cr.present) {
      sum += cr.f;
      ++present;
    }
  }
  report.macro_f = present > 0 ? sum / present : 0.0;
  return report;
}

void write_text_report(std::ostream& out, const MetricReport& report) {
  char line[128];
  std::snprintf(line, sizeof line, "%-8s %6s %6s %6s %7s %7s %7s\n", "class", "tp", "fp", "fn", "P", "R", "F");
  out << line;
  for (const auto& c : report.classes) {
    if (!c.present) continue;
    std::snprintf(line, sizeof line, "%-8s %6ld %6ld %6ld %7.4f %7.4f %7.4f\n", class_name(c.label).c_str(),
                  c.counts.tp, c.counts.fp, c.counts.fn, c.precision, c.recall, c.f);
    out << line;
  }
  std::snprintf(line, sizeof line, "macro F  %.4f\n", report.macro_f);
  out << line;
}

void write_jsonl_report(std::ostream& out, const MetricReport& report) {
  for (const auto& c : report.classes) {
    if (!c.present) continue;
    nlohmann::json j{{"class", class_name(c.label)}, {"tp", c.counts.tp}, {"fp", c.counts.fp},
                     {"fn", c.counts.fn},           {"precision", c.precision}, {"recall", c.recall},
                     {"f", c.f}};
    out << j.dump() << '\n';
  }
  out << nlohmann::json{{"macro_f", report.macro_f}}.dump() << '\n';
}

}  // namespace hpsed
