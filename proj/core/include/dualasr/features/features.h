// Copyright (c) 2026 The dualasr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dualasr/tensor/tensor.h"

namespace dualasr {

// Row-major float matrix [rows, cols].
struct FeatureMatrix {
  int64_t rows = 0;
  int64_t cols = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(int64_t r, int64_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
  float& at(int64_t r, int64_t c) { return data[r * cols + c]; }
  float at(int64_t r, int64_t c) const { return data[r * cols + c]; }
  Tensor ToTensor(DType dtype = DType::kF32) const;
};

enum class PitchMode {
  kZeros,     // zero-filled placeholder columns
  kAutocorr,  // normalized autocorrelation peak, log f0, delta log f0
};

struct FeatureConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 80;
  int pitch_dims = 3;  // 0 or 3
  PitchMode pitch = PitchMode::kZeros;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0: Nyquist + high_freq
  double preemphasis = 0.97;
  double log_floor = 1e-10;

  int window_samples() const;
  int hop_samples() const;
  int fft_size() const;
  int feature_dim() const { return n_mels + pitch_dims; }
  double effective_high_freq() const;
  // Throws ConfigError.
  void Validate() const;
};

// 1 + floor((N - window) / hop) frames; 0 when N < window.
int64_t NumFrames(int64_t num_samples, const FeatureConfig& cfg);

// Mel scale used by the filterbank: 1127 ln(1 + f / 700).
double HzToMel(double hz);
double MelToHz(double mel);
// Center frequencies (Hz) of the n_mels triangular filters.
std::vector<double> MelCenterFrequencies(const FeatureConfig& cfg);

// Log-mel filterbank (+ pitch columns) of a mono waveform in [-1, 1].
// Per frame: DC removal, pre-emphasis, Povey window, power spectrum,
// triangular mel filters, log(max(energy, log_floor)).
// Throws ContractError on an empty waveform.
FeatureMatrix ComputeFbank(std::span<const float> waveform, const FeatureConfig& cfg);

// Per-column (x - mean) / std; zero-variance columns become zeros.
FeatureMatrix UtteranceCmvn(const FeatureMatrix& frames);

struct SpecAugmentPolicy {
  int time_masks = 2;
  int time_width_min = 0;
  int time_width_max = 40;
  double time_width_ratio = 0.05;  // each width also capped at ratio * T
  double max_time_fraction = 0.2;  // all time masks together
  int freq_masks = 2;
  int freq_width_min = 0;
  int freq_width_max = 27;
  int freq_columns = 80;           // masks stay within the first columns (mel bins)
  bool time_warp = false;
  int warp_window = 5;

  void Validate() const;
};

// Zeroes random time spans and frequency bands; optional piecewise-linear
// time warp. Draws come from rng so calls are reproducible.
FeatureMatrix SpecAugment(const FeatureMatrix& frames, const SpecAugmentPolicy& policy,
                          std::mt19937_64& rng);

struct Waveform {
  int sample_rate = 0;
  std::vector<float> samples;  // mono, [-1, 1)
};

// 16-bit PCM mono RIFF/WAVE. Throws FormatError on other encodings or when
// expected_rate > 0 and the header rate differs.
Waveform ReadWav(const std::string& path, int expected_rate = 0);
void WriteWav(const std::string& path, const Waveform& wav);

// "DASRFEAT" | u32 version | u64 rows | u64 cols | little-endian f32 data.
void WriteFeatureFile(const std::string& path, const FeatureMatrix& m);
FeatureMatrix ReadFeatureFile(const std::string& path);

}  // namespace dualasr
