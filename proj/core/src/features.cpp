// SPDX-License-Identifier: Apache-2.0
#include "hpsed/features.hpp"

#include "hpsed/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

static_assert(std::endian::native == std::endian::little, "feature cache assumes a little-endian host");

namespace hpsed {

Waveform normalize_duration(const Waveform& w) {
  if (w.samples.empty()) throw InvalidInput("normalize_duration: empty waveform");
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(kClipSamples, 0.0f);
  const std::size_t n = std::min<std::size_t>(w.samples.size(), kClipSamples);
  std::copy_n(w.samples.begin(), n, out.samples.begin());
  return out;
}

double MelFilterbank::hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelFilterbank::mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax)
    : n_bins_(n_fft / 2 + 1) {
  if (n_mels < 1 || n_fft < 2 || fmax <= fmin) throw InvalidInput("MelFilterbank: bad parameters");
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mels + 1));

  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  filters_.resize(n_mels);
  centers_.resize(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], c = edges[m + 1], hi = edges[m + 2];
    centers_[m] = c;
    Filter& f = filters_[m];
    f.first_bin = -1;
    for (int k = 0; k < n_bins_; ++k) {
      const double hz = k * bin_hz;
      double wgt = 0.0;
      if (hz > lo && hz < hi) wgt = hz <= c ? (hz - lo) / (c - lo) : (hi - hz) / (hi - c);
      if (wgt <= 0.0) {
        if (f.first_bin >= 0) break;
        continue;
      }
      if (f.first_bin < 0) f.first_bin = k;
      f.weights.push_back(wgt);
    }
    if (f.first_bin < 0) f.first_bin = 0;
  }
}

Eigen::MatrixXd MelFilterbank::dense() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_bands(), n_bins_);
  for (int m = 0; m < num_bands(); ++m)
    for (std::size_t j = 0; j < filters_[m].weights.size(); ++j) w(m, filters_[m].first_bin + j) = filters_[m].weights[j];
  return w;
}

void MelFilterbank::apply(const double* magnitude, float* out_bands) const {
  for (int m = 0; m < num_bands(); ++m) {
    const Filter& f = filters_[m];
    double acc = 0.0;
    for (std::size_t j = 0; j < f.weights.size(); ++j) acc += f.weights[j] * magnitude[f.first_bin + j];
    out_bands[m] = static_cast<float>(acc);
  }
}

int analysed_frames(int num_samples, const FeatureConfig& cfg) {
  if (num_samples < cfg.n_fft) return 0;
  return 1 + (num_samples - cfg.n_fft) / cfg.hop;
}

Grid mel_energies(const Waveform& w, const FeatureConfig& cfg) {
  if (w.sample_rate != kSampleRate) throw InvalidInput("mel_energies: sample rate must be 44100 Hz");
  const MelFilterbank bank(cfg.n_mels, cfg.n_fft, w.sample_rate, cfg.fmin, cfg.fmax);
  const int frames = analysed_frames(static_cast<int>(w.samples.size()), cfg);

  // Periodic Hann window.
  std::vector<double> window(cfg.n_fft);
  for (int i = 0; i < cfg.n_fft; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / cfg.n_fft);

  Eigen::FFT<double> fft;
  std::vector<double> frame(cfg.n_fft);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> magnitude(bank.num_bins());
  std::vector<float> bands(cfg.n_mels);

  Grid out(cfg.n_mels, frames);
  for (int t = 0; t < frames; ++t) {
    const float* src = w.samples.data() + static_cast<std::size_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) frame[i] = window[i] * src[i];
    fft.fwd(spectrum, frame);
    for (int k = 0; k < bank.num_bins(); ++k) magnitude[k] = std::abs(spectrum[k]);
    bank.apply(magnitude.data(), bands.data());
    for (int m = 0; m < cfg.n_mels; ++m) out(m, t) = bands[m];
  }
  return out;
}

MelSpectrogram log_mel(const Waveform& w, const FeatureConfig& cfg) {
  const Grid lin = mel_energies(w, cfg);
  const float floor_value = static_cast<float>(std::log(cfg.log_floor));
  MelSpectrogram spec;
  spec.frame_hop_seconds = static_cast<double>(cfg.hop) / kSampleRate;
  spec.values = Grid::Constant(cfg.n_mels, cfg.frames, floor_value);
  const int keep = std::min<int>(cfg.frames, static_cast<int>(lin.cols()));
  for (int m = 0; m < cfg.n_mels; ++m)
    for (int t = 0; t < keep; ++t)
      spec.values(m, t) = static_cast<float>(std::log(static_cast<double>(lin(m, t)) + cfg.log_floor));
  return spec;
}

namespace {
constexpr char kCacheMagic[8] = {'H', 'P', 'S', 'E', 'D', '1', '\0', '\0'};
}

void write_feature_cache(const std::filesystem::path& path, const Grid& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(spec.rows()), static_cast<std::uint32_t>(spec.cols())};
  out.write(kCacheMagic, 8);
  out.write(reinterpret_cast<const char*>(dims), 8);
  out.write(reinterpret_cast<const char*>(spec.data()), static_cast<std::streamsize>(spec.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

Grid read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  std::uint32_t dims[2];
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(dims), 8);
  if (!in || std::memcmp(magic, kCacheMagic, 8)) throw IoError(path.string() + ": bad feature cache header");
  Grid spec(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(spec.data()), static_cast<std::streamsize>(spec.size() * sizeof(float)));
  if (!in) throw IoError(path.string() + ": truncated feature cache");
  return spec;
}

}  // namespace hpsed
