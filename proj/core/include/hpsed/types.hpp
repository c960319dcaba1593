// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace hpsed {

inline constexpr int kNumClasses = 10;
inline constexpr int kSampleRate = 44100;
inline constexpr double kClipSeconds = 10.0;
inline constexpr int kClipSamples = 441000;

/// Output frames of the network per clip; also the strong-label resolution.
inline constexpr int kLabelFrames = 256;
/// One output frame spans 4 analysis hops of 431 samples.
inline constexpr double kFrameDuration = 431.0 * 4.0 / kSampleRate;

/// Row-major single-precision grid. Spectrograms are bands x frames,
/// label and probability grids are frames x classes.
using Grid = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXf;

struct Event {
  int label = 0;
  double onset = 0.0;
  double offset = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

using EventList = std::vector<Event>;

/// Multi-hot clip-level labels, length kNumClasses.
using WeakLabel = Vec;

/// kLabelFrames x kNumClasses binary grid.
using StrongLabelGrid = Grid;

/// One training or evaluation clip as seen by the network.
struct Clip {
  std::string id;
  Grid spec;  // log-mel, bands x frames
  std::optional<WeakLabel> weak;
  std::optional<StrongLabelGrid> strong;
};

}  // namespace hpsed
