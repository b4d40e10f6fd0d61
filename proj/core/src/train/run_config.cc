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

#include "dualasr/train/run_config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

int64_t ParseInt(const std::string& key, const std::string& v) {
  int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double ParseDouble(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double out = 0.0;
  in >> out;
  if (!in || !in.eof() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string FormatDouble(double d) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << d;
  return os.str();
}

std::string FormatBool(bool b) { return b ? "true" : "false"; }

#define DASR_INT(KEY, EXPR)                                                         \
  Field {                                                                           \
    KEY, [](RunConfig& c, const std::string& v) { c.EXPR = static_cast<std::remove_reference_t<decltype(c.EXPR)>>(ParseInt(KEY, v)); }, \
        [](const RunConfig& c) { return std::to_string(c.EXPR); }                   \
  }
#define DASR_DOUBLE(KEY, EXPR)                                                    \
  Field {                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.EXPR = ParseDouble(KEY, v); }, \
        [](const RunConfig& c) { return FormatDouble(c.EXPR); }                   \
  }
#define DASR_BOOL(KEY, EXPR)                                                    \
  Field {                                                                       \
    KEY, [](RunConfig& c, const std::string& v) { c.EXPR = ParseBool(KEY, v); }, \
        [](const RunConfig& c) { return FormatBool(c.EXPR); }                   \
  }
#define DASR_STRING(KEY, EXPR)                                        \
  Field {                                                             \
    KEY, [](RunConfig& c, const std::string& v) { c.EXPR = v; },      \
        [](const RunConfig& c) { return c.EXPR; }                     \
  }

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      DASR_INT("run.seed", seed),
      Field{"model.variant",
            [](RunConfig& c, const std::string& v) { c.model.variant = ParseVariant(v); },
            [](const RunConfig& c) { return std::string(VariantName(c.model.variant)); }},
      DASR_INT("model.feat_dim", model.feat_dim),
      DASR_INT("model.d_model", model.d_model),
      DASR_INT("model.n_heads", model.n_heads),
      DASR_INT("model.ff_dim", model.ff_dim),
      DASR_INT("model.conv_kernel", model.conv_kernel),
      DASR_INT("model.enc_layers", model.enc_layers),
      DASR_INT("model.dec_layers", model.dec_layers),
      DASR_INT("model.sub_enc_layers", model.sub_enc_layers),
      DASR_INT("model.vocab_size", model.vocab_size),
      DASR_INT("model.subsample_channels", model.subsample_channels),
      DASR_DOUBLE("model.dropout", model.dropout),
      DASR_DOUBLE("model.rel_pos_base", model.rel_pos_base),
      DASR_BOOL("model.naive_merge_subtitles", model.naive_merge_subtitles),
      DASR_DOUBLE("loss.alpha", model.loss.alpha),
      DASR_DOUBLE("loss.beta", model.loss.beta),
      DASR_DOUBLE("loss.gamma", model.loss.gamma),
      DASR_BOOL("loss.subtitle_ctc", model.loss.subtitle_ctc),
      DASR_DOUBLE("loss.lambda_asr", model.loss.lambda_asr),
      DASR_DOUBLE("loss.lambda_subs", model.loss.lambda_subs),
      DASR_DOUBLE("loss.smoothing", model.loss.smoothing),
      DASR_INT("loss.interctc_layer", model.loss.interctc_layer),
      DASR_INT("features.sample_rate", features.sample_rate),
      DASR_DOUBLE("features.window_ms", features.window_ms),
      DASR_DOUBLE("features.hop_ms", features.hop_ms),
      DASR_INT("features.n_mels", features.n_mels),
      DASR_INT("features.pitch_dims", features.pitch_dims),
      Field{"features.pitch",
            [](RunConfig& c, const std::string& v) {
              if (v == "zeros") {
                c.features.pitch = PitchMode::kZeros;
              } else if (v == "autocorr") {
                c.features.pitch = PitchMode::kAutocorr;
              } else {
                throw ConfigError("features.pitch: expected zeros or autocorr, got '" + v + "'");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.features.pitch == PitchMode::kZeros ? "zeros" : "autocorr");
            }},
      DASR_DOUBLE("features.low_freq", features.low_freq),
      DASR_DOUBLE("features.high_freq", features.high_freq),
      DASR_DOUBLE("features.preemphasis", features.preemphasis),
      DASR_DOUBLE("features.log_floor", features.log_floor),
      DASR_INT("specaug.time_masks", spec_augment.time_masks),
      DASR_INT("specaug.time_width_min", spec_augment.time_width_min),
      DASR_INT("specaug.time_width_max", spec_augment.time_width_max),
      DASR_DOUBLE("specaug.time_width_ratio", spec_augment.time_width_ratio),
      DASR_DOUBLE("specaug.max_time_fraction", spec_augment.max_time_fraction),
      DASR_INT("specaug.freq_masks", spec_augment.freq_masks),
      DASR_INT("specaug.freq_width_min", spec_augment.freq_width_min),
      DASR_INT("specaug.freq_width_max", spec_augment.freq_width_max),
      DASR_INT("specaug.freq_columns", spec_augment.freq_columns),
      DASR_BOOL("specaug.time_warp", spec_augment.time_warp),
      DASR_INT("specaug.warp_window", spec_augment.warp_window),
      DASR_DOUBLE("optim.peak_lr", optim.peak_lr),
      DASR_INT("optim.warmup_steps", optim.warmup_steps),
      DASR_DOUBLE("optim.half_life", optim.half_life_steps),
      DASR_DOUBLE("optim.beta1", optim.beta1),
      DASR_DOUBLE("optim.beta2", optim.beta2),
      DASR_DOUBLE("optim.eps", optim.eps),
      DASR_DOUBLE("optim.weight_decay", optim.weight_decay),
      DASR_DOUBLE("optim.clip_norm", optim.clip_norm),
      DASR_INT("train.batch_size", train.batch_size),
      DASR_INT("train.max_steps", train.max_steps),
      DASR_INT("train.max_epochs", train.max_epochs),
      DASR_INT("train.valid_every", train.valid_every),
      DASR_INT("train.average_top_k", train.average_top_k),
      DASR_INT("train.log_every", train.log_every),
      DASR_BOOL("train.spec_augment", train.spec_augment),
      DASR_INT("decode.beam", decode.beam),
      DASR_DOUBLE("decode.ctc_weight", decode.ctc_weight),
      DASR_DOUBLE("decode.max_len_ratio", decode.max_len_ratio),
      DASR_DOUBLE("decode.length_bonus", decode.length_bonus),
      DASR_INT("decode.nbest", decode.nbest),
      DASR_BOOL("decode.nested", decode.nested),
      DASR_BOOL("decode.subtitle_ctc", decode.subtitle_ctc),
      DASR_BOOL("decode.cascaded_unk_states", decode.cascaded_unk_states),
      DASR_STRING("data.train_manifest", data.train_manifest),
      DASR_STRING("data.valid_manifest", data.valid_manifest),
      DASR_STRING("data.subwords", data.subwords),
      DASR_STRING("data.out_dir", data.out_dir),
  };
  return fields;
}

#undef DASR_INT
#undef DASR_DOUBLE
#undef DASR_BOOL
#undef DASR_STRING

std::string Trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

void ApplyPreset(RunConfig& c, const std::string& name) {
  const Variant v = c.model.variant;
  const int64_t vocab = c.model.vocab_size;
  if (name == "desk") {
    c.model = ModelConfig::Desk(v, vocab);
  } else if (name == "paper") {
    c.model = ModelConfig::Paper(v);
  } else if (name == "xl") {
    c.model = ModelConfig::Xl(v);
  } else {
    throw ConfigError("model.preset: expected desk, paper or xl, got '" + name + "'");
  }
}

}  // namespace

std::vector<std::string> RunConfig::Keys() {
  std::vector<std::string> keys = {"model.preset"};
  for (const Field& f : Fields()) keys.push_back(f.key);
  return keys;
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  if (key == "model.preset") {
    ApplyPreset(*this, value);
    return;
  }
  for (const Field& f : Fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'");
}

RunConfig RunConfig::Parse(std::string_view text, const std::string& source) {
  struct Assignment {
    int line;
    std::string key, value;
  };
  std::vector<Assignment> assignments;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    const std::string body = Trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
    Assignment a{lineno, Trim(body.substr(0, eq)), Trim(body.substr(eq + 1))};
    if (a.key.find('.') == std::string::npos) {
      throw ConfigError(where + "key '" + a.key + "' must have the form section.key");
    }
    assignments.push_back(std::move(a));
  }
  RunConfig c;
  auto apply = [&](const Assignment& a) {
    try {
      c.Set(a.key, a.value);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(a.line) + ": " + e.what());
    }
  };
  for (const auto& a : assignments) {
    if (a.key == "model.variant" || a.key == "model.vocab_size") apply(a);
  }
  for (const auto& a : assignments) {
    if (a.key == "model.preset") apply(a);
  }
  for (const auto& a : assignments) {
    if (a.key != "model.preset") apply(a);
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str(), path);
}

std::string RunConfig::ToString() const {
  std::string out;
  for (const Field& f : Fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::Save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write config " + path);
  os << ToString();
}

void RunConfig::Validate() const {
  model.Validate();
  features.Validate();
  spec_augment.Validate();
  optim.Validate();
  decode.Validate();
  if (features.feature_dim() != model.feat_dim) {
    throw ConfigError("features produce " + std::to_string(features.feature_dim()) +
                      " columns but model.feat_dim is " + std::to_string(model.feat_dim));
  }
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be positive");
  if (train.max_steps < 1) throw ConfigError("train.max_steps must be positive");
  if (train.max_epochs < 0) throw ConfigError("train.max_epochs must be >= 0");
  if (train.valid_every < 1) throw ConfigError("train.valid_every must be positive");
  if (train.average_top_k < 1) throw ConfigError("train.average_top_k must be positive");
  if (train.log_every < 1) throw ConfigError("train.log_every must be positive");
}

}  // namespace dualasr
