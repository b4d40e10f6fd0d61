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
#include <map>
#include <random>
#include <set>

#include "dualasr/data/batching.h"
#include "dualasr/data/filter.h"
#include "dualasr/data/loader.h"
#include "dualasr/data/manifest.h"
#include "dualasr/data/synth.h"
#include "dualasr/errors.h"

namespace dualasr {
namespace {

namespace fs = std::filesystem;

UtteranceRecord Rec(const std::string& id, double dur, std::optional<std::string> v,
                    std::optional<std::string> s) {
  UtteranceRecord r;
  r.id = id;
  r.audio.path = id + ".wav";
  r.speaker = "A";
  r.verbatim = std::move(v);
  r.subtitle = std::move(s);
  r.duration = dur;
  return r;
}

TEST(ManifestTest, RoundTripIsLossless) {
  std::vector<UtteranceRecord> recs = {Rec("a", 1.25, "hallo wereld", std::nullopt),
                                       Rec("b", 0.5, std::nullopt, "Hallo, wereld!"),
                                       Rec("c", 3.0, "x", "y")};
  recs[2].audio.start = 1.5;
  recs[2].audio.end = 4.5;
  recs[2].features = "feats/c.feat";
  const std::string text = ManifestToString(recs);
  const auto back = ParseManifest(text);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(ManifestToString(back), text);
  EXPECT_EQ(back[2].audio.start, 1.5);
  EXPECT_EQ(back[1].verbatim, std::nullopt);
  EXPECT_EQ(back[0].duration, 1.25);
}

TEST(ManifestTest, DiagnosticsNameEveryBadLine) {
  const std::string text =
      "{\"id\":\"a\",\"audio\":{\"path\":\"a.wav\"},\"verbatim\":\"x\",\"duration\":1}\n"
      "not json\n"
      "{\"id\":\"b\",\"audio\":{\"path\":\"b.wav\"},\"duration\":1}\n"
      "{\"id\":\"a\",\"audio\":{\"path\":\"a.wav\"},\"verbatim\":\"x\",\"duration\":1}\n"
      "{\"id\":\"c\",\"audio\":{\"path\":\"c.wav\"},\"verbatim\":\"x\",\"duration\":0}\n"
      "{\"id\":\"d\",\"audio\":{\"path\":\"d.wav\"},\"verbatim\":\"x\",\"duration\":1,\"x\":1}\n";
  try {
    ParseManifest(text, "m.jsonl");
    FAIL() << "accepted";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    for (const char* where : {"m.jsonl:2:", "m.jsonl:3:", "m.jsonl:4:", "m.jsonl:5:", "m.jsonl:6:"}) {
      EXPECT_NE(msg.find(where), std::string::npos) << where;
    }
    EXPECT_EQ(msg.find("m.jsonl:1:"), std::string::npos);
  }
}

TEST(BatchingTest, EqualPools) {
  const BatchPlan plan = BuildEpoch(10, 10, 4, 1);
  ASSERT_EQ(plan.size(), 5u);
  for (const auto& b : plan) {
    int v = 0;
    for (const auto& r : b) v += r.pool == Pool::kVerbatim;
    EXPECT_EQ(b.size(), 4u);
    EXPECT_EQ(v, 2);
  }
}

TEST(BatchingTest, SmallerPoolOversampled) {
  const BatchPlan plan = BuildEpoch(10, 30, 4, 7);
  ASSERT_EQ(plan.size(), 15u);
  std::map<size_t, int> vcount, scount;
  int total_v = 0, total_s = 0;
  for (const auto& b : plan) {
    int v = 0;
    for (const auto& r : b) {
      if (r.pool == Pool::kVerbatim) {
        ++vcount[r.index];
        ++total_v;
        ++v;
      } else {
        ++scount[r.index];
        ++total_s;
      }
    }
    EXPECT_EQ(v * 2, static_cast<int>(b.size()));
  }
  EXPECT_EQ(total_v, 30);
  EXPECT_EQ(total_s, 30);
  EXPECT_EQ(vcount.size(), 10u);
  for (const auto& [i, c] : vcount) EXPECT_EQ(c, 3);
  for (const auto& [i, c] : scount) EXPECT_EQ(c, 1);
}

TEST(BatchingTest, LargerPoolOnceSmallerAtLeastOnce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t nv = 1 + rng() % 40, ns = 1 + rng() % 40;
    const int bs = 2 * static_cast<int>(1 + rng() % 5);
    const BatchPlan plan = BuildEpoch(nv, ns, bs, trial);
    std::map<size_t, int> vc, sc;
    for (const auto& b : plan) {
      int v = 0;
      for (const auto& r : b) {
        (r.pool == Pool::kVerbatim ? vc : sc)[r.index]++;
        v += r.pool == Pool::kVerbatim;
      }
      EXPECT_EQ(2 * v, static_cast<int>(b.size()));
      EXPECT_LE(static_cast<int>(b.size()), bs);
    }
    const auto& large = nv >= ns ? vc : sc;
    const auto& small = nv >= ns ? sc : vc;
    EXPECT_EQ(large.size(), std::max(nv, ns));
    for (const auto& [i, c] : large) EXPECT_EQ(c, 1);
    EXPECT_EQ(small.size(), std::min(nv, ns));
  }
}

TEST(BatchingTest, SeededConcatenateAndErrors) {
  EXPECT_EQ(BuildEpoch(10, 30, 4, 3), BuildEpoch(10, 30, 4, 3));
  EXPECT_NE(BuildEpoch(10, 30, 4, 3), BuildEpoch(10, 30, 4, 4));
  const BatchPlan naive = BuildEpoch(10, 30, 4, 3, true);
  size_t v = 0, s = 0;
  for (const auto& b : naive) {
    for (const auto& r : b) (r.pool == Pool::kVerbatim ? v : s)++;
  }
  EXPECT_EQ(v, 10u);
  EXPECT_EQ(s, 30u);
  EXPECT_EQ(naive.size(), 10u);
  EXPECT_EQ(BuildEpoch(0, 7, 3, 1).size(), 3u);
  EXPECT_THROW(BuildEpoch(0, 0, 4, 1), ContractError);
  EXPECT_THROW(BuildEpoch(3, 3, 3, 1), ContractError);
}

TEST(FilterTest, ThresholdsAndReport) {
  std::vector<UtteranceRecord> pool;
  std::map<std::string, std::string> hyps;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 40; ++i) {
    const std::string id = "s" + std::to_string(i);
    std::string sub, hyp;
    for (int k = 0; k < 6; ++k) {
      const std::string w = "w" + std::to_string(rng() % 10);
      sub += (k ? " " : "") + w;
      hyp += (k ? " " : "") + (rng() % 3 == 0 ? "x" + std::to_string(k) : w);
    }
    pool.push_back(Rec(id, 0.5 + 0.01 * i, std::nullopt, sub));
    hyps[id] = hyp;
  }
  const FilterResult all = FilterByBleu(pool, hyps, 0.0);
  EXPECT_EQ(all.retained.size(), pool.size());
  std::set<std::string> prev;
  for (const auto& r : all.retained) prev.insert(r.id);
  for (double t : {10.0, 30.0, 50.0, 70.0, 90.0, 100.0}) {
    const FilterResult f = FilterByBleu(pool, hyps, t);
    std::set<std::string> ids;
    double secs = 0.0;
    size_t oracle = 0;
    for (const auto& r : pool) {
      if (SentenceBleu(hyps[r.id], *r.subtitle).score >= t) ++oracle;
    }
    for (const auto& r : f.retained) {
      ids.insert(r.id);
      secs += r.duration;
      EXPECT_TRUE(prev.count(r.id)) << "threshold " << t;
    }
    EXPECT_EQ(f.retained.size(), oracle);
    EXPECT_EQ(f.report.retained_hours, secs / 3600.0);
    EXPECT_EQ(f.report.retained_count + f.report.dropped_ids.size(), pool.size());
    prev = ids;
  }
  std::map<std::string, std::string> same;
  for (const auto& r : pool) same[r.id] = *r.subtitle;
  EXPECT_EQ(FilterByBleu(pool, same, 100.0).retained.size(), pool.size());
}

TEST(FilterTest, MissingHypothesesListed) {
  std::vector<UtteranceRecord> pool = {Rec("a", 1, std::nullopt, "x"), Rec("b", 1, std::nullopt, "y"),
                                       Rec("c", 1, std::nullopt, "z")};
  try {
    FilterByBleu(pool, {{"b", "y"}}, 10.0);
    FAIL() << "accepted";
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(" a"), std::string::npos);
    EXPECT_NE(msg.find(" c"), std::string::npos);
  }
}

TEST(SynthTest, SingleWordSingleUtterance) {
  SynthSpec spec;
  spec.words = {"hallo"};
  spec.num_utterances = 1;
  spec.min_words = 1;
  spec.max_words = 1;
  const auto corpus = SynthesizeCorpus(spec, 1);
  ASSERT_EQ(corpus.size(), 1u);
  EXPECT_EQ(corpus[0].record.verbatim, "hallo");
  EXPECT_EQ(corpus[0].record.subtitle, "hallo");
  const fs::path dir = fs::temp_directory_path() / "dualasr_synth_one";
  fs::remove_all(dir);
  const auto recs = WriteSynthCorpus(spec, 1, dir.string());
  EXPECT_TRUE(fs::exists(dir / "syn0.wav"));
  const auto back = ReadManifest((dir / "manifest.jsonl").string());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].verbatim, recs[0].verbatim);
  const Waveform w = ReadWav((dir / "syn0.wav").string(), 16000);
  EXPECT_NEAR(back[0].duration, static_cast<double>(w.samples.size()) / 16000, 1e-12);
  fs::remove_all(dir);
}

TEST(SynthTest, RewriteGrammar) {
  SynthSpec spec;
  spec.words = {"hello", "world", "i", "we", "car"};
  spec.fillers = {"uh"};
  EXPECT_EQ(RewriteSubtitle("uh hello uh world", spec), "hello world");
  spec.substitutions = {{"car", "vehicle"}};
  spec.pronoun_swaps = {{"i", "we"}};
  EXPECT_EQ(RewriteSubtitle("i uh see we car", spec), "we see i vehicle");
}

// Dominant motif tone per segment by Goertzel power at the candidate tones.
std::vector<std::string> RecoverWords(const SynthSpec& spec, const Waveform& w) {
  const auto all = spec.AllWords();
  std::vector<double> tones;
  for (size_t i = 0; i < all.size(); ++i) {
    const auto [a, b] = WordMotif(spec, i);
    for (double f : {a, b}) {
      if (std::find(tones.begin(), tones.end(), f) == tones.end()) tones.push_back(f);
    }
  }
  const int rate = spec.sample_rate;
  const size_t tone_n = static_cast<size_t>(std::lround(spec.tone_seconds * rate));
  const size_t gap_n = static_cast<size_t>(std::lround(spec.gap_seconds * rate));
  size_t pos = static_cast<size_t>(std::lround(spec.edge_seconds * rate));
  auto dominant = [&](size_t start) {
    double best = -1.0, arg = 0.0;
    for (double f : tones) {
      double re = 0.0, im = 0.0;
      for (size_t i = 0; i < tone_n; ++i) {
        const double ph = 2.0 * std::acos(-1.0) * f * static_cast<double>(i) / rate;
        re += w.samples[start + i] * std::cos(ph);
        im += w.samples[start + i] * std::sin(ph);
      }
      if (re * re + im * im > best) {
        best = re * re + im * im;
        arg = f;
      }
    }
    return arg;
  };
  std::vector<std::string> words;
  while (pos + 2 * tone_n + gap_n <= w.samples.size()) {
    const double f1 = dominant(pos), f2 = dominant(pos + tone_n);
    for (size_t i = 0; i < all.size(); ++i) {
      if (WordMotif(spec, i) == std::make_pair(f1, f2)) words.push_back(all[i]);
    }
    pos += 2 * tone_n + gap_n;
  }
  return words;
}

TEST(SynthTest, VerbatimRecoverableAndSubtitleIsRewrite) {
  const SynthSpec spec = SynthSpec::Default();
  const auto corpus = SynthesizeCorpus(spec, 42);
  ASSERT_EQ(corpus.size(), 50u);
  std::set<std::pair<double, double>> motifs;
  for (size_t i = 0; i < spec.AllWords().size(); ++i) motifs.insert(WordMotif(spec, i));
  EXPECT_EQ(motifs.size(), spec.AllWords().size());
  for (const auto& u : corpus) {
    std::string joined;
    for (const auto& w : RecoverWords(spec, u.audio)) joined += (joined.empty() ? "" : " ") + w;
    EXPECT_EQ(joined, *u.record.verbatim) << u.record.id;
    EXPECT_EQ(*u.record.subtitle, RewriteSubtitle(*u.record.verbatim, spec));
  }
  const auto again = SynthesizeCorpus(spec, 42);
  for (size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(again[i].audio.samples, corpus[i].audio.samples);
    EXPECT_EQ(again[i].record.ToJson(), corpus[i].record.ToJson());
  }
}

TEST(SynthTest, CorruptionAndJsonRoundTrip) {
  SynthSpec spec = SynthSpec::Default();
  spec.corrupt_delete = 0.2;
  spec.corrupt_replace = 0.2;
  spec.num_utterances = 200;
  int differing = 0;
  for (const auto& u : SynthesizeCorpus(spec, 3)) {
    EXPECT_FALSE(u.record.subtitle->empty());
    differing += *u.record.subtitle != RewriteSubtitle(*u.record.verbatim, spec);
  }
  EXPECT_GT(differing, 50);
  EXPECT_EQ(SynthSpec::FromJson(spec.ToJson()).ToJson(), spec.ToJson());
  EXPECT_THROW(SynthSpec::FromJson({{"bogus", 1}}), FormatError);
}

TEST(LoaderTest, FeaturesFromWavAndAssembly) {
  SynthSpec spec = SynthSpec::Default();
  spec.num_utterances = 4;
  const fs::path dir = fs::temp_directory_path() / "dualasr_loader";
  fs::remove_all(dir);
  WriteSynthCorpus(spec, 5, dir.string());
  const std::string manifest = (dir / "manifest.jsonl").string();
  const auto recs = ReadManifest(manifest);
  FeatureConfig fc;
  const FeatureMatrix f = LoadFeatures(recs[0], manifest, fc);
  EXPECT_EQ(f.cols, 83);
  EXPECT_EQ(f.rows, NumFrames(std::lround(recs[0].duration * 16000), fc));
  std::vector<std::string> corpus;
  for (const auto& r : recs) {
    corpus.push_back(*r.verbatim);
    corpus.push_back(*r.subtitle);
  }
  const SubwordModel sw = SubwordModel::Train(corpus, corpus, {.vocab_size = 60});
  Dataset ds(VerbatimPool(recs), SubtitlePool(recs), manifest, fc);
  const auto batch = ds.Assemble({{Pool::kVerbatim, 1}, {Pool::kSubtitle, 2}}, sw);
  ASSERT_EQ(batch.size(), 2u);
  EXPECT_TRUE(batch[0].verbatim.has_value());
  EXPECT_FALSE(batch[0].subtitle.has_value());
  EXPECT_EQ(sw.Decode(*batch[0].verbatim), *recs[1].verbatim);
  EXPECT_EQ(sw.Decode(*batch[1].subtitle), *recs[2].subtitle);
  EXPECT_EQ(batch[1].features.dim(1), 83);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace dualasr
