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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dualasr/errors.h"
#include "dualasr/features/features.h"
#include "dualasr/util/hash.h"
#include "oracles/oracles.h"

namespace dualasr {
namespace {

namespace fs = std::filesystem;

std::vector<float> Tone(double hz, int n, int rate = 16000, double amp = 0.5) {
  std::vector<float> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = static_cast<float>(amp * std::sin(2.0 * std::acos(-1.0) * hz * i / rate));
  }
  return w;
}

std::string TempPath(const std::string& name) {
  return (fs::temp_directory_path() / ("dualasr_features_" + name)).string();
}

TEST(FbankTest, OneSecondGives98Frames) {
  FeatureConfig cfg;
  const FeatureMatrix m = ComputeFbank(Tone(440.0, 16000), cfg);
  EXPECT_EQ(m.rows, 98);
  EXPECT_EQ(m.cols, 83);
}

TEST(FbankTest, LengthFormulaSweep) {
  FeatureConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-0.3f, 0.3f);
  for (int n = 1; n <= 2200; n += 37) {
    std::vector<float> w(n);
    for (float& x : w) x = u(rng);
    const int64_t expected = n < 400 ? 0 : 1 + (n - 400) / 160;
    EXPECT_EQ(ComputeFbank(w, cfg).rows, expected) << n;
    EXPECT_EQ(NumFrames(n, cfg), expected);
  }
}

TEST(FbankTest, SilenceHitsLogFloorEverywhere) {
  FeatureConfig cfg;
  const FeatureMatrix m = ComputeFbank(std::vector<float>(4000, 0.0f), cfg);
  const float floor = static_cast<float>(std::log(1e-10));
  for (int64_t t = 0; t < m.rows; ++t) {
    for (int c = 0; c < 80; ++c) EXPECT_EQ(m.at(t, c), floor);
    for (int c = 80; c < 83; ++c) EXPECT_EQ(m.at(t, c), 0.0f);
  }
}

TEST(FbankTest, ToneArgmaxIsNearestCenterBin) {
  FeatureConfig cfg;
  const double lo = 1127.0 * std::log(1.0 + 20.0 / 700.0);
  const double hi = 1127.0 * std::log(1.0 + 8000.0 / 700.0);
  const double d = (hi - lo) / 81.0;
  int nearest = 0;
  double best = 1e300;
  for (int m = 0; m < 80; ++m) {
    const double hz = 700.0 * (std::exp((lo + (m + 1) * d) / 1127.0) - 1.0);
    if (std::abs(hz - 1000.0) < best) {
      best = std::abs(hz - 1000.0);
      nearest = m;
    }
  }
  const FeatureMatrix f = ComputeFbank(Tone(1000.0, 8000), cfg);
  for (int64_t t = 0; t < f.rows; ++t) {
    int arg = 0;
    for (int m = 1; m < 80; ++m) {
      if (f.at(t, m) > f.at(t, arg)) arg = m;
    }
    EXPECT_EQ(arg, nearest) << "frame " << t;
  }
}

TEST(FbankTest, MatchesDirectDft) {
  FeatureConfig cfg;
  std::mt19937_64 rng(9);
  std::normal_distribution<float> g(0.0f, 0.1f);
  std::vector<float> w(1200);
  for (float& x : w) x = g(rng);
  const FeatureMatrix f = ComputeFbank(w, cfg);
  for (int64_t t = 0; t < f.rows; ++t) {
    const std::vector<double> ref = oracle::DirectDftLogMel(w, t, cfg);
    for (int m = 0; m < 80; ++m) EXPECT_NEAR(f.at(t, m), ref[m], 1e-4) << t << "," << m;
  }
}

TEST(FbankTest, AutocorrPitchFindsF0) {
  FeatureConfig cfg;
  cfg.pitch = PitchMode::kAutocorr;
  const FeatureMatrix f = ComputeFbank(Tone(200.0, 4000), cfg);
  for (int64_t t = 0; t < f.rows; ++t) {
    EXPECT_GT(f.at(t, 80), 0.9f);
    EXPECT_NEAR(std::exp(f.at(t, 81)), 200.0, 5.0);
    EXPECT_NEAR(f.at(t, 82), 0.0f, 1e-3);
  }
}

TEST(FbankTest, Contracts) {
  FeatureConfig cfg;
  EXPECT_THROW(ComputeFbank(std::vector<float>{}, cfg), ContractError);
  FeatureConfig bad = cfg;
  bad.hop_ms = 30.0;
  EXPECT_THROW(bad.Validate(), ConfigError);
  bad = cfg;
  bad.n_mels = 0;
  EXPECT_THROW(bad.Validate(), ConfigError);
}

TEST(CmvnTest, Examples) {
  FeatureMatrix m(2, 2);
  m.at(0, 0) = 1.0f;
  m.at(1, 0) = 3.0f;
  m.at(0, 1) = 7.0f;
  m.at(1, 1) = 7.0f;
  const FeatureMatrix n = UtteranceCmvn(m);
  EXPECT_FLOAT_EQ(n.at(0, 0), -1.0f);
  EXPECT_FLOAT_EQ(n.at(1, 0), 1.0f);
  EXPECT_EQ(n.at(0, 1), 0.0f);
  EXPECT_EQ(n.at(1, 1), 0.0f);
  EXPECT_THROW(UtteranceCmvn(FeatureMatrix(0, 3)), ContractError);
}

TEST(CmvnTest, StatisticsAndIdempotence) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int64_t T = 1 + static_cast<int64_t>(rng() % 200);
    FeatureMatrix m(T, 6);
    std::normal_distribution<float> g(static_cast<float>(rng() % 20) - 10.0f, 3.0f);
    for (float& x : m.data) x = g(rng);
    for (int64_t t = 0; t < T; ++t) m.at(t, 5) = 2.5f;
    const FeatureMatrix n = UtteranceCmvn(m);
    for (int64_t c = 0; c < 6; ++c) {
      double mean = 0.0, var = 0.0;
      for (int64_t t = 0; t < T; ++t) mean += n.at(t, c);
      mean /= T;
      for (int64_t t = 0; t < T; ++t) var += (n.at(t, c) - mean) * (n.at(t, c) - mean);
      var /= T;
      EXPECT_NEAR(mean, 0.0, 1e-5);
      if (c == 5 || T == 1) {
        EXPECT_EQ(var, 0.0);
      } else {
        EXPECT_NEAR(var, 1.0, 1e-4);
      }
    }
    const FeatureMatrix twice = UtteranceCmvn(n);
    for (size_t i = 0; i < n.data.size(); ++i) EXPECT_NEAR(twice.data[i], n.data[i], 1e-5);
  }
}

FeatureMatrix Ones(int64_t T, int64_t C) {
  FeatureMatrix m(T, C);
  std::fill(m.data.begin(), m.data.end(), 1.0f);
  return m;
}

TEST(SpecAugmentTest, ZeroMasksIsIdentity) {
  SpecAugmentPolicy p;
  p.time_masks = 0;
  p.freq_masks = 0;
  std::mt19937_64 rng(1);
  const FeatureMatrix m = Ones(50, 83);
  EXPECT_EQ(SpecAugment(m, p, rng).data, m.data);
}

TEST(SpecAugmentTest, SingleTimeMaskWidthTwo) {
  SpecAugmentPolicy p;
  p.time_masks = 1;
  p.time_width_min = 2;
  p.time_width_max = 2;
  p.time_width_ratio = 0.2;
  p.max_time_fraction = 0.2;
  p.freq_masks = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const FeatureMatrix out = SpecAugment(Ones(10, 83), p, rng);
    std::vector<int64_t> rows;
    int zeros = 0;
    for (int64_t t = 0; t < 10; ++t) {
      int row_zeros = 0;
      for (int64_t c = 0; c < 83; ++c) row_zeros += out.at(t, c) == 0.0f;
      zeros += row_zeros;
      if (row_zeros) {
        EXPECT_EQ(row_zeros, 83);
        rows.push_back(t);
      }
    }
    EXPECT_EQ(zeros, 2 * 83);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1], rows[0] + 1);
  }
}

TEST(SpecAugmentTest, SeededReproducible) {
  SpecAugmentPolicy p;
  p.time_warp = true;
  std::mt19937_64 src(4);
  FeatureMatrix m(120, 83);
  std::normal_distribution<float> g;
  for (float& x : m.data) x = g(src);
  std::mt19937_64 a(77), b(77);
  EXPECT_EQ(SpecAugment(m, p, a).data, SpecAugment(m, p, b).data);
}

TEST(SpecAugmentTest, NeverExceedsTimeFraction) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    SpecAugmentPolicy p;
    p.time_masks = static_cast<int>(rng() % 8);
    p.time_width_max = static_cast<int>(rng() % 60);
    p.time_width_min = static_cast<int>(rng() % (p.time_width_max + 1));
    p.time_width_ratio = UniformUnit(rng);
    p.max_time_fraction = UniformUnit(rng) * 0.5;
    p.freq_masks = 0;
    const int64_t T = 1 + static_cast<int64_t>(rng() % 300);
    const FeatureMatrix out = SpecAugment(Ones(T, 4), p, rng);
    int64_t masked = 0;
    for (int64_t t = 0; t < T; ++t) masked += out.at(t, 0) == 0.0f;
    EXPECT_LE(masked, static_cast<int64_t>(std::floor(p.max_time_fraction * T)));
  }
}

TEST(SpecAugmentTest, FrequencyMasksStayInMelColumns) {
  SpecAugmentPolicy p;
  p.time_masks = 0;
  p.freq_masks = 2;
  p.freq_width_min = 10;
  p.freq_width_max = 27;
  std::mt19937_64 rng(2);
  const FeatureMatrix out = SpecAugment(Ones(20, 83), p, rng);
  int zero_cols = 0;
  for (int64_t c = 0; c < 83; ++c) {
    const bool z = out.at(0, c) == 0.0f;
    zero_cols += z;
    for (int64_t t = 1; t < 20; ++t) EXPECT_EQ(out.at(t, c) == 0.0f, z);
    if (c >= 80) EXPECT_FALSE(z);
  }
  EXPECT_GE(zero_cols, 10);
}

TEST(WavTest, RoundTripAndRateCheck) {
  const std::string path = TempPath("rt.wav");
  Waveform w;
  w.sample_rate = 16000;
  w.samples = Tone(300.0, 1234);
  WriteWav(path, w);
  const Waveform r = ReadWav(path, 16000);
  EXPECT_EQ(r.sample_rate, 16000);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  for (size_t i = 0; i < r.samples.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32768);
  EXPECT_THROW(ReadWav(path, 8000), FormatError);
  fs::remove(path);
}

TEST(WavTest, RejectsGarbage) {
  const std::string path = TempPath("bad.wav");
  std::ofstream(path) << "not a wav file at all";
  EXPECT_THROW(ReadWav(path), FormatError);
  EXPECT_THROW(ReadWav(TempPath("missing.wav")), FormatError);
  fs::remove(path);
}

TEST(FeatureFileTest, RoundTripAndCorruption) {
  const std::string path = TempPath("f.feat");
  FeatureMatrix m(7, 83);
  std::mt19937_64 rng(8);
  std::normal_distribution<float> g;
  for (float& x : m.data) x = g(rng);
  WriteFeatureFile(path, m);
  const FeatureMatrix r = ReadFeatureFile(path);
  EXPECT_EQ(r.rows, 7);
  EXPECT_EQ(r.cols, 83);
  EXPECT_EQ(r.data, m.data);
  fs::resize_file(path, fs::file_size(path) - 1);
  EXPECT_THROW(ReadFeatureFile(path), FormatError);
  fs::remove(path);
}

}  // namespace
}  // namespace dualasr
