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

#include "dualasr/features/features.h"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "dualasr/errors.h"
#include "dualasr/util/hash.h"

namespace dualasr {

namespace {

// Plan creation and destruction in FFTW are not thread-safe.
std::mutex& FftwMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    std::lock_guard<std::mutex> lock(FftwMutex());
    plan_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(FftwMutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  // Power spectrum |X_k|^2 for k = 0..n/2.
  void PowerSpectrum(std::vector<double>& power) {
    fftw_execute(plan_);
    power.resize(n_ / 2 + 1);
    for (int k = 0; k <= n_ / 2; ++k) {
      power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }
  }

 private:
  int n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

struct MelBank {
  int first_bin = 0;
  std::vector<double> weights;
};

std::vector<MelBank> BuildMelBanks(const FeatureConfig& cfg) {
  const int fft = cfg.fft_size();
  const double bin_hz = static_cast<double>(cfg.sample_rate) / fft;
  const double mel_lo = HzToMel(cfg.low_freq);
  const double mel_hi = HzToMel(cfg.effective_high_freq());
  const double delta = (mel_hi - mel_lo) / (cfg.n_mels + 1);
  std::vector<MelBank> banks(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = mel_lo + m * delta;
    const double center = left + delta;
    const double right = center + delta;
    MelBank& b = banks[m];
    b.first_bin = -1;
    for (int k = 0; k < fft / 2; ++k) {
      const double mel = HzToMel(bin_hz * k);
      if (mel <= left || mel >= right) continue;
      const double w = mel <= center ? (mel - left) / (center - left)
                                     : (right - mel) / (right - center);
      if (b.first_bin < 0) b.first_bin = k;
      b.weights.resize(k - b.first_bin + 1, 0.0);
      b.weights[k - b.first_bin] = w;
    }
    if (b.first_bin < 0) {
      throw ConfigError("fbank: mel filter " + std::to_string(m) +
                        " covers no FFT bin; use fewer mel bins");
    }
  }
  return banks;
}

std::vector<double> PoveyWindow(int n) {
  std::vector<double> w(n);
  const double a = 2.0 * std::numbers::pi / (n - 1);
  for (int i = 0; i < n; ++i) w[i] = std::pow(0.5 - 0.5 * std::cos(a * i), 0.85);
  return w;
}

// Writes [nccf, log f0, delta log f0] per frame from the raw waveform.
void AutocorrPitch(std::span<const float> wav, const FeatureConfig& cfg,
                   FeatureMatrix& out) {
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const int min_lag = std::max(1, cfg.sample_rate / 400);
  const int max_lag = std::min(win - 1, cfg.sample_rate / 50);
  const int col = cfg.n_mels;
  std::vector<double> frame(win);
  for (int64_t t = 0; t < out.rows; ++t) {
    double mean = 0.0;
    for (int i = 0; i < win; ++i) mean += wav[t * hop + i];
    mean /= win;
    for (int i = 0; i < win; ++i) frame[i] = wav[t * hop + i] - mean;
    double best = 0.0;
    int best_lag = max_lag;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      for (int i = 0; i + lag < win; ++i) {
        num += frame[i] * frame[i + lag];
        e0 += frame[i] * frame[i];
        e1 += frame[i + lag] * frame[i + lag];
      }
      const double den = std::sqrt(e0 * e1);
      const double r = den > 0.0 ? num / den : 0.0;
      if (r > best) {
        best = r;
        best_lag = lag;
      }
    }
    out.at(t, col) = static_cast<float>(best);
    out.at(t, col + 1) = static_cast<float>(
        std::log(static_cast<double>(cfg.sample_rate) / best_lag));
  }
  for (int64_t t = 0; t < out.rows; ++t) {
    const int64_t prev = std::max<int64_t>(t - 1, 0);
    const int64_t next = std::min<int64_t>(t + 1, out.rows - 1);
    out.at(t, col + 2) = 0.5f * (out.at(next, col + 1) - out.at(prev, col + 1));
  }
}

void WriteU32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void WriteU16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void WriteU64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t LoadLe(const unsigned char* p, int bytes) {
  uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string ReadAll(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(std::string(what) + ": cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int DrawInt(std::mt19937_64& rng, int lo, int hi) {
  if (hi <= lo) return lo;
  const int span = hi - lo + 1;
  return lo + std::min(span - 1, static_cast<int>(UniformUnit(rng) * span));
}

}  // namespace

Tensor FeatureMatrix::ToTensor(DType dtype) const {
  return Tensor({rows, cols}, std::vector<double>(data.begin(), data.end()), dtype);
}

int FeatureConfig::window_samples() const {
  return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
}

int FeatureConfig::hop_samples() const {
  return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
}

int FeatureConfig::fft_size() const {
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(window_samples())));
}

double FeatureConfig::effective_high_freq() const {
  const double nyquist = 0.5 * sample_rate;
  return high_freq > 0.0 ? high_freq : nyquist + high_freq;
}

void FeatureConfig::Validate() const {
  if (sample_rate <= 0) throw ConfigError("features: sample_rate must be positive");
  if (hop_samples() < 1) throw ConfigError("features: hop must cover at least one sample");
  if (window_samples() <= hop_samples()) {
    throw ConfigError("features: window must be longer than hop");
  }
  if (n_mels < 1) throw ConfigError("features: n_mels must be >= 1");
  if (pitch_dims != 0 && pitch_dims != 3) {
    throw ConfigError("features: pitch_dims must be 0 or 3");
  }
  const double hi = effective_high_freq();
  if (low_freq < 0.0 || hi <= low_freq || hi > 0.5 * sample_rate) {
    throw ConfigError("features: need 0 <= low_freq < high_freq <= Nyquist");
  }
  if (log_floor <= 0.0) throw ConfigError("features: log_floor must be positive");
}

int64_t NumFrames(int64_t num_samples, const FeatureConfig& cfg) {
  const int64_t win = cfg.window_samples();
  if (num_samples < win) return 0;
  return 1 + (num_samples - win) / cfg.hop_samples();
}

double HzToMel(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::exp(mel / 1127.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const FeatureConfig& cfg) {
  const double lo = HzToMel(cfg.low_freq);
  const double hi = HzToMel(cfg.effective_high_freq());
  const double delta = (hi - lo) / (cfg.n_mels + 1);
  std::vector<double> centers(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) centers[m] = MelToHz(lo + (m + 1) * delta);
  return centers;
}

FeatureMatrix ComputeFbank(std::span<const float> waveform, const FeatureConfig& cfg) {
  cfg.Validate();
  if (waveform.empty()) throw ContractError("fbank: empty waveform");
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const int fft = cfg.fft_size();
  const int64_t frames = NumFrames(static_cast<int64_t>(waveform.size()), cfg);
  FeatureMatrix out(frames, cfg.feature_dim());
  if (frames == 0) return out;

  const std::vector<MelBank> banks = BuildMelBanks(cfg);
  const std::vector<double> window = PoveyWindow(win);
  const double log_floor = std::log(cfg.log_floor);
  RealFft fft_plan(fft);
  std::vector<double> frame(win), power;
  for (int64_t t = 0; t < frames; ++t) {
    const float* src = waveform.data() + t * hop;
    double mean = 0.0;
    for (int i = 0; i < win; ++i) mean += src[i];
    mean /= win;
    for (int i = 0; i < win; ++i) frame[i] = src[i] - mean;
    for (int i = win - 1; i > 0; --i) frame[i] -= cfg.preemphasis * frame[i - 1];
    frame[0] -= cfg.preemphasis * frame[0];
    double* in = fft_plan.input();
    for (int i = 0; i < win; ++i) in[i] = frame[i] * window[i];
    std::fill(in + win, in + fft, 0.0);
    fft_plan.PowerSpectrum(power);
    for (int m = 0; m < cfg.n_mels; ++m) {
      const MelBank& b = banks[m];
      double e = 0.0;
      for (size_t j = 0; j < b.weights.size(); ++j) e += b.weights[j] * power[b.first_bin + j];
      out.at(t, m) = static_cast<float>(
          e > cfg.log_floor ? std::log(e) : log_floor);
    }
  }
  if (cfg.pitch_dims == 3 && cfg.pitch == PitchMode::kAutocorr) {
    AutocorrPitch(waveform, cfg, out);
  }
  return out;
}

FeatureMatrix UtteranceCmvn(const FeatureMatrix& frames) {
  if (frames.rows < 1) throw ContractError("cmvn: needs at least one frame");
  FeatureMatrix out(frames.rows, frames.cols);
  const double n = static_cast<double>(frames.rows);
  for (int64_t c = 0; c < frames.cols; ++c) {
    double mean = 0.0;
    for (int64_t t = 0; t < frames.rows; ++t) mean += frames.at(t, c);
    mean /= n;
    double var = 0.0;
    for (int64_t t = 0; t < frames.rows; ++t) {
      const double d = frames.at(t, c) - mean;
      var += d * d;
    }
    var /= n;
    const double scale = std::abs(mean) + 1.0;
    if (var <= 1e-12 * scale * scale) continue;
    const double inv = 1.0 / std::sqrt(var);
    for (int64_t t = 0; t < frames.rows; ++t) {
      out.at(t, c) = static_cast<float>((frames.at(t, c) - mean) * inv);
    }
  }
  return out;
}

void SpecAugmentPolicy::Validate() const {
  if (time_masks < 0 || freq_masks < 0) {
    throw ConfigError("spec_augment: mask counts must be non-negative");
  }
  if (time_width_min < 0 || time_width_max < time_width_min) {
    throw ConfigError("spec_augment: need 0 <= time_width_min <= time_width_max");
  }
  if (freq_width_min < 0 || freq_width_max < freq_width_min) {
    throw ConfigError("spec_augment: need 0 <= freq_width_min <= freq_width_max");
  }
  if (time_width_ratio < 0.0 || time_width_ratio > 1.0 || max_time_fraction < 0.0 ||
      max_time_fraction > 1.0) {
    throw ConfigError("spec_augment: time ratios must lie in [0, 1]");
  }
  if (freq_columns < 0) throw ConfigError("spec_augment: freq_columns must be >= 0");
  if (warp_window < 0) throw ConfigError("spec_augment: warp_window must be >= 0");
}

FeatureMatrix SpecAugment(const FeatureMatrix& frames, const SpecAugmentPolicy& policy,
                          std::mt19937_64& rng) {
  policy.Validate();
  FeatureMatrix out = frames;
  const int64_t T = frames.rows;
  if (T == 0) return out;

  if (policy.time_warp && policy.warp_window > 0 && T > 2 * policy.warp_window + 1) {
    const int w = policy.warp_window;
    const int center = DrawInt(rng, w, static_cast<int>(T) - w - 1);
    const int moved = DrawInt(rng, center - w + 1, center + w - 1);
    for (int64_t t = 0; t < T; ++t) {
      int64_t src;
      if (t < moved) {
        src = static_cast<int64_t>(std::floor(static_cast<double>(t) * center / moved));
      } else {
        src = center + static_cast<int64_t>(std::floor(
                           static_cast<double>(t - moved) * (T - center) / (T - moved)));
      }
      src = std::clamp<int64_t>(src, 0, T - 1);
      std::copy_n(frames.data.begin() + src * frames.cols, frames.cols,
                  out.data.begin() + t * out.cols);
    }
  }

  int64_t budget = static_cast<int64_t>(std::floor(policy.max_time_fraction * T));
  const int64_t width_cap = std::min<int64_t>(
      policy.time_width_max,
      static_cast<int64_t>(std::floor(policy.time_width_ratio * T)));
  for (int i = 0; i < policy.time_masks; ++i) {
    const int64_t hi = std::min(width_cap, budget);
    const int64_t lo = std::min<int64_t>(policy.time_width_min, hi);
    const int64_t width = DrawInt(rng, static_cast<int>(lo), static_cast<int>(hi));
    const int64_t start = DrawInt(rng, 0, static_cast<int>(T - width));
    budget -= width;
    std::fill(out.data.begin() + start * out.cols,
              out.data.begin() + (start + width) * out.cols, 0.0f);
  }

  const int64_t F = std::min<int64_t>(policy.freq_columns, frames.cols);
  for (int i = 0; i < policy.freq_masks; ++i) {
    const int64_t hi = std::min<int64_t>(policy.freq_width_max, F);
    const int64_t lo = std::min<int64_t>(policy.freq_width_min, hi);
    const int64_t width = DrawInt(rng, static_cast<int>(lo), static_cast<int>(hi));
    const int64_t start = DrawInt(rng, 0, static_cast<int>(F - width));
    for (int64_t t = 0; t < T; ++t) {
      for (int64_t c = start; c < start + width; ++c) out.at(t, c) = 0.0f;
    }
  }
  return out;
}

Waveform ReadWav(const std::string& path, int expected_rate) {
  const std::string bytes = ReadAll(path, "wav");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError("wav: " + path + " is not a RIFF/WAVE file");
  }
  Waveform wav;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= n) {
    const size_t size = LoadLe(p + pos + 4, 4);
    const size_t body = pos + 8;
    if (body + size > n) throw FormatError("wav: truncated chunk in " + path);
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("wav: short fmt chunk in " + path);
      const uint64_t format = LoadLe(p + body, 2);
      const uint64_t channels = LoadLe(p + body + 2, 2);
      const uint64_t bits = LoadLe(p + body + 14, 2);
      wav.sample_rate = static_cast<int>(LoadLe(p + body + 4, 4));
      if (format != 1 || bits != 16) {
        throw FormatError("wav: " + path + " is not 16-bit PCM");
      }
      if (channels != 1) throw FormatError("wav: " + path + " is not mono");
      if (expected_rate > 0 && wav.sample_rate != expected_rate) {
        throw FormatError("wav: " + path + " has sample rate " +
                          std::to_string(wav.sample_rate) + ", expected " +
                          std::to_string(expected_rate));
      }
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt in " + path);
      wav.samples.resize(size / 2);
      for (size_t i = 0; i < size / 2; ++i) {
        const auto v = static_cast<int16_t>(LoadLe(p + body + 2 * i, 2));
        wav.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("wav: no data chunk in " + path);
}

void WriteWav(const std::string& path, const Waveform& wav) {
  if (wav.sample_rate <= 0) throw ContractError("wav: sample rate must be positive");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("wav: cannot write " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(wav.samples.size() * 2);
  os.write("RIFF", 4);
  WriteU32(os, 36 + data_bytes);
  os.write("WAVEfmt ", 8);
  WriteU32(os, 16);
  WriteU16(os, 1);
  WriteU16(os, 1);
  WriteU32(os, static_cast<uint32_t>(wav.sample_rate));
  WriteU32(os, static_cast<uint32_t>(wav.sample_rate) * 2);
  WriteU16(os, 2);
  WriteU16(os, 16);
  os.write("data", 4);
  WriteU32(os, data_bytes);
  for (float s : wav.samples) {
    const double scaled = std::round(static_cast<double>(s) * 32768.0);
    WriteU16(os, static_cast<uint16_t>(static_cast<int16_t>(
                     std::clamp(scaled, -32768.0, 32767.0))));
  }
  if (!os) throw FormatError("wav: write failed for " + path);
}

void WriteFeatureFile(const std::string& path, const FeatureMatrix& m) {
  if (static_cast<int64_t>(m.data.size()) != m.rows * m.cols) {
    throw ShapeError("feature file: matrix data does not match its shape");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("feature file: cannot write " + path);
  os.write("DASRFEAT", 8);
  WriteU32(os, 1);
  WriteU64(os, static_cast<uint64_t>(m.rows));
  WriteU64(os, static_cast<uint64_t>(m.cols));
  for (float v : m.data) WriteU32(os, std::bit_cast<uint32_t>(v));
  if (!os) throw FormatError("feature file: write failed for " + path);
}

FeatureMatrix ReadFeatureFile(const std::string& path) {
  const std::string bytes = ReadAll(path, "feature file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  constexpr size_t kHeader = 8 + 4 + 8 + 8;
  if (bytes.size() < kHeader || std::memcmp(p, "DASRFEAT", 8) != 0) {
    throw FormatError("feature file: bad magic in " + path);
  }
  const uint64_t version = LoadLe(p + 8, 4);
  if (version != 1) {
    throw FormatError("feature file: unsupported version " + std::to_string(version));
  }
  const uint64_t rows = LoadLe(p + 12, 8);
  const uint64_t cols = LoadLe(p + 20, 8);
  if (cols != 0 && rows > (std::numeric_limits<uint64_t>::max() / 4) / cols) {
    throw FormatError("feature file: implausible shape in " + path);
  }
  if (bytes.size() != kHeader + rows * cols * 4) {
    throw FormatError("feature file: size does not match header in " + path);
  }
  FeatureMatrix m(static_cast<int64_t>(rows), static_cast<int64_t>(cols));
  for (size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = std::bit_cast<float>(static_cast<uint32_t>(LoadLe(p + kHeader + 4 * i, 4)));
  }
  return m;
}

}  // namespace dualasr
