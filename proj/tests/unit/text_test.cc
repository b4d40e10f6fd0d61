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

#include <random>

#include "dualasr/errors.h"
#include "dualasr/text/longform.h"
#include "dualasr/text/normalize.h"
#include "dualasr/text/subword.h"
#include "dualasr/text/vocab.h"

namespace dualasr {
namespace {

std::vector<std::string> Repeat(const std::string& s, int n) { return std::vector<std::string>(n, s); }

TEST(NormalizeTest, NormalizedModeStripsCasePunctuationAndTags) {
  EXPECT_EQ(NormalizeText("  Hello, World!  <*d>Uh  ", TextMode::kNormalized), "hello world uh");
  EXPECT_EQ(NormalizeText("z'n auto-rijden -- 'quoted'", TextMode::kNormalized),
            "z'n auto-rijden quoted");
  EXPECT_EQ(NormalizeText("A  B\tC", TextMode::kRich), "A B C");
  EXPECT_EQ(NormalizeText("Hallo, <*d>ja.", TextMode::kRich), "Hallo, <*d>ja.");
}

TEST(NormalizeTest, Idempotent) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "abcXYZ .,!?'-<>*\t";
  for (int i = 0; i < 300; ++i) {
    std::string s;
    const int len = static_cast<int>(rng() % 30);
    for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    for (TextMode m : {TextMode::kNormalized, TextMode::kRich}) {
      const std::string once = NormalizeText(s, m);
      EXPECT_EQ(NormalizeText(once, m), once) << '"' << s << '"';
    }
    const std::string st = StripForScoring(s);
    EXPECT_EQ(StripForScoring(st), st);
  }
}

TEST(NormalizeTest, ScoringStripsTagsTaskTokensAndPunctuation) {
  EXPECT_EQ(StripForScoring("<verbatim> Hallo, <spk> wereld! <*d>ja"), "Hallo wereld ja");
  EXPECT_EQ(StripForScoring("a <spk> b"), "a b");
}

TEST(NormalizeTest, RewriteRules) {
  const auto rules = ParseRewriteRules("# comment\n\\*\\w+\t\nuh\t\n");
  EXPECT_EQ(rules.size(), 2u);
  EXPECT_EQ(ApplyRewriteRules("uh hello *music world", rules), "hello world");
  EXPECT_THROW(ParseRewriteRules("no tab here\n"), FormatError);
  EXPECT_THROW(ParseRewriteRules("([\tx\n"), FormatError);
}

TEST(SubwordTest, RepeatedWordBecomesOneToken) {
  const auto corpus = Repeat("banana", 20);
  SubwordTrainOptions opt;
  opt.vocab_size = 40;
  SubwordModel m = SubwordModel::Train(corpus, corpus, opt);
  const auto ids = m.Encode("banana");
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(m.Piece(ids[0]), std::string(kWordBoundary) + "banana");
  EXPECT_EQ(m.Decode(ids), "banana");
}

TEST(SubwordTest, RoundTripAndSpecialFraming) {
  const std::vector<std::string> verb = {"the cat sat on the mat", "a cat and a hat",
                                         "the hat is on the cat"};
  const std::vector<std::string> subs = {"cat on mat", "the hat"};
  SubwordTrainOptions opt;
  opt.vocab_size = 60;
  SubwordModel m = SubwordModel::Train(verb, subs, opt);
  for (const auto& s : verb) EXPECT_EQ(m.Decode(m.Encode(s)), s);
  EXPECT_EQ(m.Decode(m.Encode("tac ham")), "tac ham");
  const auto framed = m.Encode("", vocab::Task::kSubtitle, true);
  EXPECT_EQ(framed, (std::vector<int64_t>{vocab::kSubtitle, vocab::kSos, vocab::kEos}));
  const auto v = m.Encode("the cat", vocab::Task::kVerbatim, false);
  EXPECT_EQ(v[0], vocab::kVerbatim);
  EXPECT_EQ(v[1], vocab::kSos);
  EXPECT_EQ(v.back(), vocab::kEos);
  EXPECT_EQ(m.Decode(v), "the cat");
  const auto plain = m.Encode("the cat", std::nullopt, true);
  EXPECT_EQ(plain.front(), vocab::kSos);
  EXPECT_THROW(m.Decode(std::vector<int64_t>{m.size()}), ContractError);
}

TEST(SubwordTest, SpecialsNeverProducedFromText) {
  const std::vector<std::string> verb = {"<sos> eos blank sos <eos>", "unk <verbatim>"};
  SubwordTrainOptions opt;
  opt.vocab_size = 80;
  SubwordModel m = SubwordModel::Train(verb, verb, opt);
  for (int64_t id : m.Encode("<sos> eos blank sos <eos> <verbatim> <subtitle> <blank>")) {
    EXPECT_TRUE(id == vocab::kUnk || id >= vocab::kNumReserved) << id;
  }
  EXPECT_EQ(m.Encode("<spk>"), (std::vector<int64_t>{vocab::kSpk}));
}

TEST(SubwordTest, OutOfAlphabetCharacterMapsToUnk) {
  const auto corpus = Repeat("abc abc", 5);
  SubwordTrainOptions opt;
  opt.vocab_size = 30;
  SubwordModel m = SubwordModel::Train(corpus, corpus, opt);
  const auto ids = m.Encode("abz");
  EXPECT_EQ(ids.back(), vocab::kUnk);
  EXPECT_EQ(m.Decode(ids), "ab<unk>");
  EXPECT_EQ(m.Encode("\xC3\xA9")[1], vocab::kUnk);
}

TEST(SubwordTest, VocabTooSmallIsConfigError) {
  const auto corpus = Repeat("abcdef", 3);
  SubwordTrainOptions opt;
  opt.vocab_size = vocab::kNumReserved + 3;
  EXPECT_THROW(SubwordModel::Train(corpus, corpus, opt), ConfigError);
  EXPECT_THROW(SubwordModel::Train({}, corpus, SubwordTrainOptions{}), ContractError);
}

TEST(SubwordTest, SubtitleSampleContributesMerges) {
  // "qz" never occurs in the verbatim text but is frequent in subtitles.
  const std::vector<std::string> verb = Repeat("ab ab ab ab ab ab ab ab", 4);
  const std::vector<std::string> subs = Repeat("qz qz qz qz qz qz qz qz", 4);
  SubwordTrainOptions opt;
  opt.vocab_size = 40;
  SubwordModel mixed = SubwordModel::Train(verb, subs, opt);
  SubwordModel plain = SubwordModel::Train(verb, verb, opt);
  EXPECT_GE(mixed.PieceId(std::string(kWordBoundary) + "qz"), 0);
  EXPECT_LT(plain.PieceId(std::string(kWordBoundary) + "qz"), 0);
}

TEST(SubwordTest, RichTagsAreAtomicAndRoundTrip) {
  const std::vector<std::string> verb = {"Hallo, <*d>ja dat is <*a>goed.", "<*d>ja ja <*d>nee"};
  SubwordTrainOptions opt;
  opt.vocab_size = 120;
  SubwordModel m = SubwordModel::Train(verb, verb, opt);
  for (const auto& s : verb) EXPECT_EQ(m.Decode(m.Encode(s)), s);
  const auto ids = m.Encode("<*d>ja");
  EXPECT_EQ(m.Piece(ids[0]), std::string(kWordBoundary) + "<*d>");
  EXPECT_EQ(m.Decode(m.Encode("ja <spk> dat")), "ja <spk> dat");
  EXPECT_EQ(m.Encode("<*unseen>")[0], vocab::kUnk);
}

TEST(SubwordTest, SerializationRoundTripAndErrors) {
  const std::vector<std::string> verb = {"one two three two one", "three three two"};
  SubwordTrainOptions opt;
  opt.vocab_size = 50;
  SubwordModel m = SubwordModel::Train(verb, verb, opt);
  const std::string text = m.ToString();
  EXPECT_EQ(text.rfind("#dualasr-subword v1\n", 0), 0u);
  SubwordModel back = SubwordModel::FromString(text);
  EXPECT_EQ(back.ToString(), text);
  EXPECT_EQ(back.Hash(), m.Hash());
  EXPECT_EQ(back.Encode("two three one"), m.Encode("two three one"));
  EXPECT_THROW(SubwordModel::FromString("#other v2\n"), FormatError);
  EXPECT_THROW(SubwordModel::FromString(text.substr(0, text.size() - 8)), FormatError);
  const std::string path = testing::TempDir() + "/bpe.model";
  m.Save(path);
  EXPECT_EQ(SubwordModel::Load(path).Hash(), m.Hash());
}

TEST(SubwordTest, TrainingIsDeterministicUnderSeed) {
  std::vector<std::string> verb, subs;
  std::mt19937_64 rng(5);
  const std::vector<std::string> words = {"de", "kat", "zat", "op", "mat", "ja", "nee"};
  for (int i = 0; i < 40; ++i) {
    std::string v, s;
    for (int k = 0; k < 5; ++k) v += (k ? " " : "") + words[rng() % words.size()];
    for (int k = 0; k < 3; ++k) s += (k ? " " : "") + words[rng() % words.size()];
    verb.push_back(v);
    subs.push_back(s);
  }
  SubwordTrainOptions opt;
  opt.vocab_size = 60;
  opt.seed = 3;
  EXPECT_EQ(SubwordModel::Train(verb, subs, opt).ToString(),
            SubwordModel::Train(verb, subs, opt).ToString());
}

std::vector<LongformSegment> Segs(const std::vector<double>& durs,
                                  const std::vector<std::string>& spk) {
  std::vector<LongformSegment> out;
  for (size_t i = 0; i < durs.size(); ++i) {
    out.push_back({"u" + std::to_string(i), spk[i], durs[i], "w" + std::to_string(i),
                   "s" + std::to_string(i)});
  }
  return out;
}

TEST(LongformTest, SameSpeakerPacksToCap) {
  const auto r = ConcatLongform(Segs({3, 3, 3, 3, 3}, {"A", "A", "A", "A", "A"}));
  ASSERT_EQ(r.utterances.size(), 1u);
  EXPECT_DOUBLE_EQ(r.utterances[0].duration, 15.0);
  EXPECT_EQ(*r.utterances[0].verbatim, "w0 w1 w2 w3 w4");
}

TEST(LongformTest, CapSplitsAndOversizePassesThrough) {
  const auto r = ConcatLongform(Segs({8, 8}, {"A", "A"}));
  EXPECT_EQ(r.utterances.size(), 2u);
  const auto big = ConcatLongform(Segs({4, 20, 4}, {"A", "A", "A"}));
  ASSERT_EQ(big.utterances.size(), 3u);
  EXPECT_TRUE(big.utterances[1].oversize);
  EXPECT_EQ(big.warnings.size(), 1u);
}

TEST(LongformTest, SpeakerChangesInsertSpkTokens) {
  const auto r = ConcatLongform(Segs({3, 3, 3}, {"A", "B", "A"}));
  ASSERT_EQ(r.utterances.size(), 1u);
  EXPECT_EQ(*r.utterances[0].verbatim, "w0 <spk> w1 <spk> w2");
  EXPECT_EQ(*r.utterances[0].subtitle, "s0 <spk> s1 <spk> s2");
  EXPECT_EQ(r.utterances[0].id, "u0+3");
}

TEST(LongformTest, PropertiesOnRandomRecordings) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dur(0.5, 17.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> durs;
    std::vector<std::string> spk;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      durs.push_back(dur(rng));
      spk.push_back(std::string(1, static_cast<char>('A' + rng() % 3)));
    }
    const auto segs = Segs(durs, spk);
    const auto r = ConcatLongform(segs);
    size_t covered = 0;
    for (const auto& u : r.utterances) {
      if (u.sources.size() > 1) EXPECT_LE(u.duration, 15.0);
      if (u.duration > 15.0) EXPECT_TRUE(u.oversize);
      int changes = 0;
      for (size_t k = 1; k < u.sources.size(); ++k) {
        changes += segs[u.sources[k]].speaker != segs[u.sources[k - 1]].speaker;
      }
      int spk_count = 0;
      for (const auto& w : SplitWhitespace(*u.verbatim)) spk_count += w == "<spk>";
      EXPECT_EQ(spk_count, changes);
      for (size_t s : u.sources) EXPECT_EQ(s, covered++);
    }
    EXPECT_EQ(covered, segs.size());
  }
}

}  // namespace
}  // namespace dualasr
