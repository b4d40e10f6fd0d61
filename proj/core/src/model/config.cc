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

#include "dualasr/model/config.h"

#include <array>
#include <utility>

#include "dualasr/errors.h"
#include "dualasr/nn/subsampling.h"
#include "dualasr/text/vocab.h"

namespace dualasr {

namespace {

constexpr std::array<std::pair<Variant, std::string_view>, 6> kVariantNames = {{
    {Variant::kNaiveE2E, "naive"},
    {Variant::kSharedTaskDecoder, "shared_task_decoder"},
    {Variant::kParallelDecoders, "parallel"},
    {Variant::kCascadedEncoder, "cascaded_encoder"},
    {Variant::kCascadedDecoder, "cascaded_decoder"},
    {Variant::kCascadedEncoderDual, "cascaded_encoder_dual"},
}};

}  // namespace

std::string_view VariantName(Variant v) {
  for (const auto& [k, name] : kVariantNames) {
    if (k == v) return name;
  }
  return "unknown";
}

Variant ParseVariant(std::string_view name) {
  for (const auto& [k, n] : kVariantNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

bool HasSubtitleEncoder(Variant v) {
  return v == Variant::kCascadedEncoder || v == Variant::kCascadedDecoder ||
         v == Variant::kCascadedEncoderDual;
}

bool HasSecondDecoder(Variant v) {
  return v != Variant::kNaiveE2E && v != Variant::kSharedTaskDecoder;
}

bool SupportsSubtitles(Variant v) { return v != Variant::kNaiveE2E; }

ModelConfig ModelConfig::Paper(Variant v, int sub_enc_layers) {
  ModelConfig c;
  c.variant = v;
  c.sub_enc_layers = sub_enc_layers;
  return c;
}

ModelConfig ModelConfig::Xl(Variant v, int sub_enc_layers) {
  ModelConfig c = Paper(v, sub_enc_layers);
  c.d_model = 512;
  c.n_heads = 8;
  return c;
}

ModelConfig ModelConfig::Desk(Variant v, int64_t vocab_size) {
  ModelConfig c;
  c.variant = v;
  c.d_model = 32;
  c.n_heads = 2;
  c.ff_dim = 64;
  c.conv_kernel = 7;
  c.enc_layers = 2;
  c.dec_layers = 2;
  c.sub_enc_layers = 1;
  c.vocab_size = vocab_size;
  c.rel_pos_base = 100.0;
  c.loss.interctc_layer = 1;
  return c;
}

void ModelConfig::Validate() const {
  auto positive = [](const char* name, int64_t v) {
    if (v <= 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive("feat_dim", feat_dim);
  positive("d_model", d_model);
  positive("n_heads", n_heads);
  positive("ff_dim", ff_dim);
  positive("conv_kernel", conv_kernel);
  positive("enc_layers", enc_layers);
  positive("dec_layers", dec_layers);
  if (HasSubtitleEncoder(variant)) positive("sub_enc_layers", sub_enc_layers);
  if (d_model % n_heads != 0) {
    throw ConfigError("model.d_model must be divisible by model.n_heads");
  }
  if (conv_kernel % 2 == 0) throw ConfigError("model.conv_kernel must be odd");
  if (feat_dim < nn::Conv2dSubsampling::kMinFrames) {
    throw ConfigError("model.feat_dim too small for the subsampling front-end");
  }
  if (vocab_size <= vocab::kNumReserved) {
    throw ConfigError("model.vocab_size " + std::to_string(vocab_size) +
                      " leaves no room after the " + std::to_string(vocab::kNumReserved) +
                      " reserved special tokens");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0,1)");
  if (!(rel_pos_base > 1.0)) throw ConfigError("model.rel_pos_base must be > 1");
  loss.Validate();
  if (loss.interctc_layer > enc_layers) {
    throw ConfigError("loss.interctc_layer " + std::to_string(loss.interctc_layer) +
                      " exceeds model.enc_layers " + std::to_string(enc_layers));
  }
  if (loss.subtitle_ctc && variant != Variant::kCascadedEncoder &&
      variant != Variant::kCascadedEncoderDual) {
    throw ConfigError("loss.subtitle_ctc requires a cascaded encoder variant, got " +
                      std::string(VariantName(variant)));
  }
}

nlohmann::json ModelConfig::ToJson() const {
  return {
      {"variant", std::string(VariantName(variant))},
      {"feat_dim", feat_dim},
      {"d_model", d_model},
      {"n_heads", n_heads},
      {"ff_dim", ff_dim},
      {"conv_kernel", conv_kernel},
      {"enc_layers", enc_layers},
      {"dec_layers", dec_layers},
      {"sub_enc_layers", sub_enc_layers},
      {"vocab_size", vocab_size},
      {"subsample_channels", subsample_channels},
      {"dropout", dropout},
      {"rel_pos_base", rel_pos_base},
      {"naive_merge_subtitles", naive_merge_subtitles},
      {"seed", seed},
      {"loss",
       {{"alpha", loss.alpha},
        {"beta", loss.beta},
        {"gamma", loss.gamma},
        {"subtitle_ctc", loss.subtitle_ctc},
        {"lambda_asr", loss.lambda_asr},
        {"lambda_subs", loss.lambda_subs},
        {"smoothing", loss.smoothing},
        {"interctc_layer", loss.interctc_layer}}},
  };
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.variant = ParseVariant(j.at("variant").get<std::string>());
    c.feat_dim = j.at("feat_dim");
    c.d_model = j.at("d_model");
    c.n_heads = j.at("n_heads");
    c.ff_dim = j.at("ff_dim");
    c.conv_kernel = j.at("conv_kernel");
    c.enc_layers = j.at("enc_layers");
    c.dec_layers = j.at("dec_layers");
    c.sub_enc_layers = j.at("sub_enc_layers");
    c.vocab_size = j.at("vocab_size");
    c.subsample_channels = j.at("subsample_channels");
    c.dropout = j.at("dropout");
    c.rel_pos_base = j.at("rel_pos_base");
    c.naive_merge_subtitles = j.at("naive_merge_subtitles");
    c.seed = j.at("seed");
    const auto& l = j.at("loss");
    c.loss.alpha = l.at("alpha");
    c.loss.beta = l.at("beta");
    c.loss.gamma = l.at("gamma");
    c.loss.subtitle_ctc = l.at("subtitle_ctc");
    c.loss.lambda_asr = l.at("lambda_asr");
    c.loss.lambda_subs = l.at("lambda_subs");
    c.loss.smoothing = l.at("smoothing");
    c.loss.interctc_layer = l.at("interctc_layer");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

namespace {

int64_t LinearCount(int64_t in, int64_t out, bool bias = true) { return in * out + (bias ? out : 0); }
int64_t NormCount(int64_t d) { return 2 * d; }
int64_t AttentionCount(int64_t d, bool relative) {
  // q, v, o with bias; k without bias.
  int64_t n = 3 * LinearCount(d, d) + LinearCount(d, d, false);
  if (relative) n += LinearCount(d, d, false) + 2 * d;
  return n;
}
int64_t FeedForwardCount(int64_t d, int64_t ff) { return LinearCount(d, ff) + LinearCount(ff, d); }

}  // namespace

int64_t CountParameters(const ModelConfig& c) {
  const int64_t d = c.d_model, v = c.vocab_size, ch = c.channels();
  const int64_t f_out = nn::Conv2dSubsampling::OutputFeatureDim(c.feat_dim);
  int64_t n = 0;
  // Front-end.
  n += ch * 9 + ch + ch * ch * 9 + ch + LinearCount(ch * f_out, d);
  // Conformer encoder.
  const int64_t conv = LinearCount(d, 2 * d) + c.conv_kernel * d + d + NormCount(d) + LinearCount(d, d);
  const int64_t conformer =
      2 * FeedForwardCount(d, c.ff_dim) + AttentionCount(d, true) + conv + 5 * NormCount(d);
  n += c.enc_layers * conformer + NormCount(d);
  n += LinearCount(d, v);  // CTC head
  // Subtitle encoder.
  if (HasSubtitleEncoder(c.variant)) {
    const int64_t layer = AttentionCount(d, false) + FeedForwardCount(d, c.ff_dim) + 2 * NormCount(d);
    n += c.sub_enc_layers * layer + NormCount(d);
    if (c.loss.subtitle_ctc) n += LinearCount(d, v);
  }
  // Decoders.
  auto decoder = [&](int sources) {
    const int64_t layer = AttentionCount(d, false) + NormCount(d) +
                          sources * (AttentionCount(d, false) + NormCount(d)) +
                          FeedForwardCount(d, c.ff_dim) + NormCount(d);
    return c.dec_layers * layer + NormCount(d) + LinearCount(d, v);
  };
  n += v * d;  // shared token embedding
  const bool dual = c.variant == Variant::kCascadedEncoderDual;
  n += decoder(dual ? 2 : 1);
  if (HasSecondDecoder(c.variant)) n += decoder(HasSubtitleEncoder(c.variant) ? 2 : 1);
  return n;
}

}  // namespace dualasr
