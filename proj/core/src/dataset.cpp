// SPDX-License-Identifier: Apache-2.0
#include "hpsed/dataset.hpp"

#include "hpsed/errors.hpp"
#include "hpsed/labels.hpp"
#include "hpsed/manifest.hpp"

namespace hpsed {

namespace fs = std::filesystem;

Clip make_clip(std::string id, const Waveform& audio, const FeatureConfig& features, std::optional<WeakLabel> weak,
               const EventList* events) {
  Clip c;
  c.id = std::move(id);
  c.spec = log_mel(audio, features).values;
  if (events) {
    c.strong = rasterize_events(*events);
    c.weak = weak ? *weak : weak_from_events(*events);
  } else {
    c.weak = std::move(weak);
  }
  return c;
}

namespace {

Grid features_for(const fs::path& wav, const FeatureConfig& features, const std::optional<fs::path>& cache_dir,
                  const std::string& pool) {
  fs::path cached;
  if (cache_dir) {
    cached = *cache_dir / ("hop" + std::to_string(features.hop) + "_f" + std::to_string(features.frames)) / pool /
             (wav.filename().string() + ".bin");
    if (fs::exists(cached)) return read_feature_cache(cached);
  }
  Grid spec = log_mel(read_wav(wav), features).values;
  if (cache_dir) {
    fs::create_directories(cached.parent_path());
    write_feature_cache(cached, spec);
  }
  return spec;
}

}  // namespace

Dataset load_validation_set(const fs::path& dir, const FeatureConfig& features,
                            const std::optional<fs::path>& cache_dir) {
  Dataset d;
  d.validation_events = load_strong_manifest(dir / "validation.tsv");
  for (const auto& [name, events] : d.validation_events) {
    Clip c;
    c.id = name;
    c.spec = features_for(dir / "audio" / "validation" / name, features, cache_dir, "validation");
    c.strong = rasterize_events(events);
    c.weak = weak_from_events(events);
    d.validation.push_back(std::move(c));
  }
  return d;
}

Dataset load_dataset(const fs::path& dir, const FeatureConfig& features, const std::optional<fs::path>& cache_dir) {
  Dataset d;
  auto audio = [&](const std::string& pool, const std::string& name) { return dir / "audio" / pool / name; };

  for (const auto& [name, w] : load_weak_manifest(dir / "weak.tsv")) {
    Clip c;
    c.id = name;
    c.spec = features_for(audio("weak", name), features, cache_dir, "weak");
    c.weak = w;
    d.weak.push_back(std::move(c));
  }
  d.strong_events = load_strong_manifest(dir / "strong.tsv");
  for (const auto& [name, events] : d.strong_events) {
    Clip c;
    c.id = name;
    c.spec = features_for(audio("strong", name), features, cache_dir, "strong");
    c.strong = rasterize_events(events);
    c.weak = weak_from_events(events);
    d.strong.push_back(std::move(c));
  }
  for (const auto& name : load_clip_list(dir / "unlabeled.tsv")) {
    Clip c;
    c.id = name;
    c.spec = features_for(audio("unlabeled", name), features, cache_dir, "unlabeled");
    d.unlabeled.push_back(std::move(c));
  }
  if (fs::exists(dir / "validation.tsv")) {
    Dataset v = load_validation_set(dir, features, cache_dir);
    d.validation = std::move(v.validation);
    d.validation_events = std::move(v.validation_events);
  }
  return d;
}

Dataset synth_dataset(std::uint64_t seed, const DatasetCounts& counts, const FeatureConfig& features) {
  Dataset d;
  for (const auto& p : plan_pool(seed, "weak", counts.weak))
    d.weak.push_back(make_clip(p.id, render_clip(p), features, weak_from_events(p.events)));
  for (const auto& p : plan_pool(seed, "strong", counts.strong)) {
    d.strong.push_back(make_clip(p.id, render_clip(p), features, std::nullopt, &p.events));
    d.strong_events[p.id] = p.events;
  }
  for (const auto& p : plan_pool(seed, "unlabeled", counts.unlabeled))
    d.unlabeled.push_back(make_clip(p.id, render_clip(p), features));
  for (const auto& p : plan_pool(seed, "validation", counts.validation)) {
    d.validation.push_back(make_clip(p.id, render_clip(p), features, std::nullopt, &p.events));
    d.validation_events[p.id] = p.events;
  }
  return d;
}

}  // namespace hpsed
