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

#include "dualasr/pipeline/pipeline.h"

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "dualasr/data/loader.h"
#include "dualasr/data/manifest.h"
#include "dualasr/errors.h"
#include "dualasr/metrics/metrics.h"
#include "dualasr/model/checkpoint.h"
#include "dualasr/text/subword.h"

namespace dualasr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string FeatureFileName(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
                    c == '-' || c == '+';
    out += ok ? c : '_';
  }
  return "feats/" + out + ".feat";
}

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write " + path.string());
  os << text;
  if (!os) throw FormatError("write failed for " + path.string());
}

// Writes next to the destination, then renames into place.
void WriteTextAtomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  WriteText(tmp, text);
  fs::rename(tmp, path);
}

json TargetsLine(const UtteranceRecord& r, const SubwordModel& sw) {
  json j = {{"id", r.id}};
  if (r.verbatim) j["verbatim"] = sw.Encode(*r.verbatim);
  if (r.subtitle) j["subtitle"] = sw.Encode(*r.subtitle);
  return j;
}

FeatureMatrix ConcatRows(const std::vector<const FeatureMatrix*>& parts) {
  FeatureMatrix out;
  out.cols = parts.front()->cols;
  for (const FeatureMatrix* p : parts) {
    if (p->cols != out.cols) throw ShapeError("long-form: feature widths differ");
    out.rows += p->rows;
    out.data.insert(out.data.end(), p->data.begin(), p->data.end());
  }
  return out;
}

vocab::Task ParseTaskName(const std::string& s, const std::string& where) {
  if (s == "verbatim") return vocab::Task::kVerbatim;
  if (s == "subtitle") return vocab::Task::kSubtitle;
  throw FormatError(where + "unknown task '" + s + "'");
}

std::map<std::string, std::string> HypothesisMap(const std::string& path, vocab::Task task) {
  std::map<std::string, std::string> out;
  for (const HypothesisLine& h : ReadHypotheses(path)) {
    if (h.task != task) continue;
    if (!out.emplace(h.id, h.text).second) {
      throw FormatError(path + ": duplicate " + std::string(vocab::TaskName(task)) +
                        " hypothesis for '" + h.id + "'");
    }
  }
  return out;
}

std::optional<EquivalenceTable> MaybeTable(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return EquivalenceTable::Load(path);
}

}  // namespace

PrepareResult Prepare(const PrepareOptions& o) {
  o.features.Validate();
  std::vector<UtteranceRecord> records = ReadManifest(o.manifest);
  if (records.empty()) throw ContractError("prepare: manifest " + o.manifest + " has no records");
  if (o.out_dir.empty()) throw ContractError("prepare: no output directory");

  const fs::path out = fs::path(o.out_dir).lexically_normal();
  const fs::path stage = fs::path(out.string() + ".partial");
  fs::remove_all(stage);
  fs::create_directories(stage / "feats");
  PrepareResult result;
  try {
    std::set<std::string> names;
    std::vector<FeatureMatrix> feats;
    feats.reserve(records.size());
    for (UtteranceRecord& r : records) {
      if (o.text_mode) {
        if (r.verbatim) r.verbatim = NormalizeText(*r.verbatim, *o.text_mode);
        if (r.subtitle) r.subtitle = NormalizeText(*r.subtitle, *o.text_mode);
      }
      feats.push_back(LoadFeatures(r, o.manifest, o.features));
      const std::string name = FeatureFileName(r.id);
      if (!names.insert(name).second) {
        throw FormatError("prepare: ids map to the same feature file " + name);
      }
      WriteFeatureFile((stage / name).string(), feats.back());
      r.audio.path = fs::absolute(ResolvePath(o.manifest, r.audio.path)).lexically_normal().string();
      r.features = name;
    }

    SubwordModel sw = [&] {
      if (!o.subwords.empty()) return SubwordModel::Load(o.subwords);
      std::vector<std::string> verbatim, subtitles;
      for (const auto& r : records) {
        if (r.verbatim) verbatim.push_back(*r.verbatim);
        if (r.subtitle) subtitles.push_back(*r.subtitle);
      }
      return SubwordModel::Train(verbatim, subtitles, {.vocab_size = o.vocab_size, .seed = o.seed});
    }();
    sw.Save((stage / "subwords.model").string());

    WriteText(stage / "manifest.jsonl", ManifestToString(records));
    std::string targets;
    for (const auto& r : records) targets += TargetsLine(r, sw).dump() + "\n";
    WriteText(stage / "targets.jsonl", targets);
    result.utterances = records.size();

    if (o.longform) {
      std::vector<LongformSegment> segs;
      for (const auto& r : records) segs.push_back({r.id, r.speaker, r.duration, r.verbatim, r.subtitle});
      const LongformResult lf = ConcatLongform(segs, o.longform_options);
      std::vector<UtteranceRecord> merged;
      for (const LongformUtterance& u : lf.utterances) {
        std::vector<const FeatureMatrix*> parts;
        for (size_t s : u.sources) parts.push_back(&feats[s]);
        UtteranceRecord m;
        m.id = u.id;
        m.audio.path = records[u.sources.front()].audio.path;
        m.speaker = records[u.sources.front()].speaker;
        m.verbatim = u.verbatim;
        m.subtitle = u.subtitle;
        m.duration = u.duration;
        const std::string name = FeatureFileName(u.id);
        if (u.sources.size() > 1) {
          if (!names.insert(name).second) {
            throw FormatError("prepare: long-form id collides with feature file " + name);
          }
          WriteFeatureFile((stage / name).string(), ConcatRows(parts));
        }
        m.features = name;
        merged.push_back(std::move(m));
      }
      WriteText(stage / "longform.jsonl", ManifestToString(merged));
      result.longform_utterances = merged.size();
      result.warnings = lf.warnings;
    }

    const json summary = {{"utterances", result.utterances},
                          {"longform_utterances", result.longform_utterances},
                          {"hours", TotalHours(records)},
                          {"subwords_hash", Hex(sw.Hash())},
                          {"vocab_size", sw.size()},
                          {"warnings", result.warnings}};
    WriteText(stage / "prepare.json", summary.dump(2) + "\n");
  } catch (...) {
    fs::remove_all(stage);
    throw;
  }
  fs::remove_all(out);
  fs::rename(stage, out);
  return result;
}

TrainSummary TrainFromConfig(RunConfig c, const std::function<void(const StepLog&)>& on_step) {
  if (c.data.train_manifest.empty()) throw ConfigError("data.train_manifest is not set");
  if (c.data.subwords.empty()) throw ConfigError("data.subwords is not set");
  const std::vector<UtteranceRecord> records = ReadManifest(c.data.train_manifest);
  if (records.empty()) throw ContractError("train: manifest has no records");
  const SubwordModel sw = SubwordModel::Load(c.data.subwords);
  c.model.vocab_size = sw.size();
  c.model.seed = c.seed;
  c.Validate();
  const Dataset train(VerbatimPool(records), SubtitlePool(records), c.data.train_manifest,
                      c.features);
  std::optional<Dataset> valid;
  if (!c.data.valid_manifest.empty()) {
    const std::vector<UtteranceRecord> v = ReadManifest(c.data.valid_manifest);
    valid.emplace(VerbatimPool(v), SubtitlePool(v), c.data.valid_manifest, c.features);
  }
  Model model(c.model);
  Trainer trainer(c, model, sw, train, valid ? &*valid : nullptr);
  return trainer.Run(on_step);
}

int ThreadsFromEnv() {
  const char* v = std::getenv("DUALASR_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) {
    throw ConfigError(std::string("DUALASR_THREADS must be an integer in [1, 1024], got '") + v +
                      "'");
  }
  return static_cast<int>(n);
}

size_t DecodeManifest(const DecodeOptions& o) {
  o.decode.Validate();
  CheckpointHeader header;
  const Model model = LoadModel(o.checkpoint, &header);
  const SubwordModel sw = SubwordModel::Load(o.subwords);
  if (header.vocab_hash != sw.Hash()) {
    throw ConfigError("subword model " + o.subwords + " (hash " + Hex(sw.Hash()) +
                      ") does not match the checkpoint (hash " + Hex(header.vocab_hash) + ")");
  }
  if (o.tasks.empty()) throw ContractError("decode: no task requested");
  for (vocab::Task t : o.tasks) {
    if (!model.SupportsTask(t)) {
      throw UnsupportedTaskError("variant " + std::string(VariantName(model.config().variant)) +
                                 " cannot decode task " + std::string(vocab::TaskName(t)));
    }
  }
  const std::vector<UtteranceRecord> records = ReadManifest(o.manifest);
  const bool dual = o.tasks.size() == 2 && o.tasks[0] != o.tasks[1];

  std::vector<std::vector<json>> lines(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  auto texts_of = [&](const SearchResult& r) {
    std::vector<std::string> texts;
    for (const Hypothesis& h : r.nbest) texts.push_back(sw.Decode(HypothesisLabels(h)));
    return texts;
  };
  auto work = [&](size_t i) {
    try {
      const Tensor feats = LoadFeatures(records[i], o.manifest, o.features).ToTensor();
      if (dual) {
        const DualResult r = DualDecode(model, feats, o.decode);
        for (vocab::Task t : o.tasks) {
          const SearchResult& s = t == vocab::Task::kVerbatim ? r.verbatim : r.subtitle;
          lines[i].push_back(DecodeRecord(records[i].id, t, texts_of(s), s));
        }
      } else {
        for (vocab::Task t : o.tasks) {
          const SearchResult s = Decode(model, feats, t, o.decode);
          lines[i].push_back(DecodeRecord(records[i].id, t, texts_of(s), s));
        }
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int threads = std::max(1, std::min<int>(o.threads, static_cast<int>(records.size())));
  if (threads == 1) {
    for (size_t i = 0; i < records.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (size_t i = t; i < records.size(); i += threads) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::string text;
  size_t n = 0;
  for (const auto& per : lines) {
    for (const json& j : per) {
      text += j.dump() + "\n";
      ++n;
    }
  }
  WriteTextAtomic(o.out, text);
  return n;
}

std::vector<HypothesisLine> ReadHypotheses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("hypotheses: cannot open " + path);
  std::vector<HypothesisLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    try {
      const json j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(),
                     ParseTaskName(j.at("task").get<std::string>(), where),
                     j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

json Score(const ScoreOptions& o) {
  const std::vector<UtteranceRecord> refs = ReadManifest(o.refs);
  const auto hyps = HypothesisMap(o.hyps, o.task);
  std::optional<std::map<std::string, std::string>> other;
  if (!o.compare.empty()) other = HypothesisMap(o.compare, o.task);
  const std::optional<EquivalenceTable> eq = MaybeTable(o.equivalences);
  const EquivalenceTable* eqp = eq ? &*eq : nullptr;

  std::vector<std::string> ids, ref_texts, hyp_a, hyp_b;
  std::vector<std::string> missing;
  for (const auto& r : refs) {
    const auto& text = o.task == vocab::Task::kVerbatim ? r.verbatim : r.subtitle;
    if (!text) continue;
    auto it = hyps.find(r.id);
    if (it == hyps.end()) {
      missing.push_back(r.id);
      continue;
    }
    ids.push_back(r.id);
    ref_texts.push_back(*text);
    hyp_a.push_back(it->second);
    if (other) {
      auto jt = other->find(r.id);
      if (jt == other->end()) {
        missing.push_back(r.id + " (comparison)");
        continue;
      }
      hyp_b.push_back(jt->second);
    }
  }
  if (!missing.empty()) {
    std::string msg = "score: no hypothesis for";
    for (const auto& id : missing) msg += " " + id;
    throw ContractError(msg);
  }
  if (ids.empty()) throw ContractError("score: no reference carries the requested task text");

  auto wer_of = [&](const std::vector<std::string>& hs, std::vector<double>* per) {
    WerResult total;
    for (size_t i = 0; i < ids.size(); ++i) {
      try {
        const WerResult w = Wer(hs[i], ref_texts[i], eqp);
        total += w;
        if (per) per->push_back(static_cast<double>(w.errors()));
      } catch (const ContractError& e) {
        throw ContractError("score: segment '" + ids[i] + "': " + e.what());
      }
    }
    return total;
  };
  auto wer_json = [](const WerResult& w) {
    return json{{"wer", w.wer()},           {"substitutions", w.substitutions},
                {"deletions", w.deletions}, {"insertions", w.insertions},
                {"ref_words", w.ref_words}};
  };
  auto bleu_json = [](const BleuResult& b) {
    return json{{"bleu", b.score}, {"precisions", b.precisions},
                {"brevity_penalty", b.brevity_penalty}};
  };

  std::vector<double> err_a, err_b;
  const WerResult wa = wer_of(hyp_a, &err_a);
  const BleuResult ba = CorpusBleu(hyp_a, ref_texts, eqp);
  json report = {{"task", std::string(vocab::TaskName(o.task))},
                 {"segments", ids.size()},
                 {"wer", wer_json(wa)},
                 {"bleu", bleu_json(ba)}};
  if (other) {
    const WerResult wb = wer_of(hyp_b, &err_b);
    const BleuResult bb = CorpusBleu(hyp_b, ref_texts, eqp);
    const double p_wer = ids.size() >= 2 ? MapsswePValue(err_a, err_b) : 1.0;
    const double p_bleu =
        ids.size() >= 2 ? BootstrapBleuPValue(hyp_a, hyp_b, ref_texts, o.resamples, o.seed, eqp)
                        : 1.0;
    report["compare"] = {{"wer", wer_json(wb)},
                         {"bleu", bleu_json(bb)},
                         {"mapsswe_p", p_wer},
                         {"wer_significance", SignificanceTag(p_wer)},
                         {"bootstrap_p", p_bleu},
                         {"bleu_significance", SignificanceTag(p_bleu)}};
  }
  if (!o.per_utterance_tsv.empty()) {
    std::string tsv = "id\terrors\tref_words\tbleu\treference\thypothesis\n";
    for (size_t i = 0; i < ids.size(); ++i) {
      const WerResult w = Wer(hyp_a[i], ref_texts[i], eqp);
      std::ostringstream row;
      row << ids[i] << '\t' << w.errors() << '\t' << w.ref_words << '\t'
          << SentenceBleu(hyp_a[i], ref_texts[i], eqp).score << '\t' << ref_texts[i] << '\t'
          << hyp_a[i] << '\n';
      tsv += row.str();
    }
    WriteTextAtomic(o.per_utterance_tsv, tsv);
  }
  return report;
}

FilterReport FilterManifest(const FilterOptions& o) {
  const std::vector<UtteranceRecord> records = ReadManifest(o.manifest);
  const auto hyps = HypothesisMap(o.hyps, o.hyp_task);
  const std::optional<EquivalenceTable> eq = MaybeTable(o.equivalences);
  const FilterResult r = FilterByBleu(records, hyps, o.threshold, eq ? &*eq : nullptr);
  if (!o.out.empty()) WriteTextAtomic(o.out, ManifestToString(r.retained));
  if (!o.report.empty()) WriteTextAtomic(o.report, r.report.ToJson().dump(2) + "\n");
  return r.report;
}

json InspectCheckpoint(const std::string& path) {
  const Checkpoint c = ReadCheckpoint(path);
  int64_t n = 0;
  json arrays = json::array();
  for (const auto& [name, t] : c.arrays) {
    n += t.numel();
    arrays.push_back({name, t.shape()});
  }
  return {{"path", path},
          {"config", c.header.config.ToJson()},
          {"vocab_hash", Hex(c.header.vocab_hash)},
          {"step", c.header.step},
          {"extra", c.header.extra},
          {"num_parameters", n},
          {"arrays", arrays}};
}

}  // namespace dualasr
