// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hpsed/nn/layers.hpp"
#include "hpsed/params.hpp"
#include "hpsed/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hpsed {

/// Shape constants of the pyramid squeeze-excitation CRNN.
struct ArchitectureConfig {
  int n_mels = 128;
  int input_frames = 1024;
  std::array<int, 3> pyramid_kernels{3, 5, 7};
  int pyramid_branch_filters = 16;
  std::vector<int> se_filters{16, 32, 64, 128, 128, 128, 128};
  int se_kernel = 3;
  /// (time, frequency) pooling after each gated layer.
  std::vector<std::pair<int, int>> poolings{{2, 2}, {2, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}, {1, 2}};
  int gru_units = 64;
  int gru_layers = 2;
  int se_reduction = 4;
  int classes = kNumClasses;
  bool batch_norm = true;
  nn::PoolType pooling = nn::PoolType::Average;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  /// Inverted dropout on the recurrent output, train mode only.
  double dropout = 0.0;

  /// Desk-scale variant: 128 x 256 input (one frame per output frame),
  /// filters and recurrent units quartered, no time pooling.
  static ArchitectureConfig reduced();
  /// 128 x 64 input, filters halved; used for finite-difference checks.
  static ArchitectureConfig half_width_short();

  int time_pool() const;
  int freq_pool() const;
  int output_frames() const { return input_frames / time_pool(); }
  int pyramid_channels() const { return 3 * pyramid_branch_filters; }
  int se_bottleneck(int channels) const { return std::max(1, channels / se_reduction); }

  /// Throws InvalidInput when the pooling does not collapse the mel axis or
  /// does not divide the input.
  void validate() const;

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

/// Trainable parameters plus normalisation running statistics.
template <typename S>
struct ModelState {
  ParamSet<S> params;
  ParamSet<S> buffers;

  template <typename T>
  ModelState<T> cast() const {
    return {params.template cast<T>(), buffers.template cast<T>()};
  }
};

enum class Mode {
  Train,  // batch statistics in normalisation, dropout active
  Eval,   // running statistics
};

template <typename S>
struct BatchOutput {
  std::vector<Matrix<S>> strong;  // per clip, output_frames x classes
  std::vector<Vector<S>> weak;    // per clip, classes
};

template <typename S>
struct ForwardCache;

/// Float predictions for one clip.
struct Predictions {
  Grid strong;
  Vec weak;
};

template <typename S>
class PseCrnn {
 public:
  explicit PseCrnn(ArchitectureConfig config);
  ~PseCrnn();
  PseCrnn(const PseCrnn&);
  PseCrnn& operator=(const PseCrnn&);
  PseCrnn(PseCrnn&&) noexcept;
  PseCrnn& operator=(PseCrnn&&) noexcept;

  const ArchitectureConfig& config() const { return config_; }
  const ParamLayout& param_layout() const { return params_; }
  const ParamLayout& buffer_layout() const { return buffers_; }
  Eigen::Index parameter_count() const { return params_.total(); }

  /// Fan-in scaled uniform weights, orthogonal recurrent blocks, zero biases.
  ModelState<S> init(std::uint64_t seed) const;

  /// inputs: one n_mels x input_frames matrix per clip. `cache` is filled for
  /// a later backward() when non-null. `dropout_seed` only matters in train
  /// mode with dropout > 0.
  BatchOutput<S> forward(const ModelState<S>& state, std::span<const Matrix<S>> inputs, Mode mode,
                         ForwardCache<S>* cache = nullptr, std::uint64_t dropout_seed = 0) const;

  /// Accumulates parameter gradients for upstream gradients on the strong
  /// grids and/or the weak vectors (either span may be empty).
  void backward(const ModelState<S>& state, const ForwardCache<S>& cache, std::span<const Matrix<S>> d_strong,
                std::span<const Vector<S>> d_weak, ParamSet<S>& grads) const;

  /// Folds the batch statistics recorded in `cache` into the running buffers.
  void update_running_stats(ModelState<S>& state, const ForwardCache<S>& cache) const;

  ParamSet<S> zero_grads() const { return ParamSet<S>(params_); }

 private:
  struct Index;
  /// The three pyramid branches as one kernel of the largest size, smaller
  /// kernels zero-embedded at the centre.
  std::pair<Matrix<S>, Vector<S>> pyramid_as_one(const ParamSet<S>& p) const;

  ArchitectureConfig config_;
  ParamLayout params_;
  ParamLayout buffers_;
  std::unique_ptr<Index> idx_;
};

template <typename S>
struct ForwardCache {
  struct SeLayer {
    int freq = 0, time = 0;                 // pre-pool map size
    std::vector<Matrix<S>> input;           // C_in x P_in
    std::vector<Matrix<S>> ab;              // conv pair output, 2C x P
    nn::BatchNormCache<S> bn;
    std::vector<Matrix<S>> se_input;        // normalised GLU output
    std::vector<nn::SeCache<S>> se;
    std::vector<std::vector<int>> argmax;   // max pooling only
  };
  struct Recurrent {
    std::vector<nn::GruCache<S>> fwd, bwd;  // per clip
  };
  Mode mode = Mode::Train;
  std::vector<Matrix<S>> input;
  std::vector<SeLayer> se;
  std::vector<Recurrent> gru;
  std::vector<Matrix<S>> head_input;        // T' x 2H after dropout
  std::vector<Matrix<S>> dropout_mask;
  std::vector<nn::HeadCache<S>> heads;
};

/// Eval-mode prediction for one float spectrogram.
Predictions predict(const PseCrnn<float>& model, const ModelState<float>& state, const Grid& spec);

/// Mean of strong grids and weak vectors across models (all sharing `model`).
Predictions ensemble_predict(const PseCrnn<float>& model, std::span<const ModelState<float>> states, const Grid& spec);

extern template class PseCrnn<float>;
extern template class PseCrnn<double>;

}  // namespace hpsed
