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

// dualasr command-line tool.
//
// Exit codes: 0 success, 1 runtime error, 2 usage or configuration error,
// 3 training divergence.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dualasr/data/synth.h"
#include "dualasr/errors.h"
#include "dualasr/pipeline/pipeline.h"

namespace dualasr {
namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

// Run configuration shared by subcommands: --config file, then --set
// overrides in order, then --seed.
struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;

  void Attach(CLI::App* app) {
    app->add_option("--config", path, "Run configuration file (section.key = value)")
        ->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override one key, e.g. --set decode.beam=5")
        ->type_name("KEY=VALUE");
    app->add_option("--seed", seed, "Random seed (run.seed)");
  }

  RunConfig Resolve() const {
    RunConfig c = path.empty() ? RunConfig() : RunConfig::Load(path);
    for (const std::string& s : sets) {
      const size_t eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
      c.Set(std::string(CLI::detail::trim_copy(s.substr(0, eq))),
            std::string(CLI::detail::trim_copy(s.substr(eq + 1))));
    }
    if (seed) c.seed = *seed;
    return c;
  }
};

std::vector<vocab::Task> ParseTasks(const std::string& s) {
  if (s == "verbatim") return {vocab::Task::kVerbatim};
  if (s == "subtitle") return {vocab::Task::kSubtitle};
  if (s == "both") return {vocab::Task::kVerbatim, vocab::Task::kSubtitle};
  throw ConfigError("--task must be verbatim, subtitle or both, got '" + s + "'");
}

void EmitJson(const nlohmann::json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(out);
  if (!(os << text)) throw FormatError("cannot write " + out);
}

int Run(int argc, char** argv) {
  CLI::App app{"Joint verbatim and subtitle speech recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dualasr 0.1.0");

  // prepare
  CLI::App* prepare = app.add_subcommand("prepare", "Compute features, train subwords, encode targets");
  PrepareOptions prep;
  ConfigArgs prep_cfg;
  std::string text_mode;
  prepare->add_option("--manifest", prep.manifest, "Input manifest (JSONL)")->required();
  prepare->add_option("--out", prep.out_dir, "Output directory")->required();
  prepare->add_option("--vocab-size", prep.vocab_size, "Subword vocabulary size")
      ->capture_default_str();
  prepare->add_option("--subwords", prep.subwords, "Reuse this subword model")
      ->check(CLI::ExistingFile);
  prepare->add_option("--text-mode", text_mode, "Normalize texts first: normalized or rich")
      ->check(CLI::IsMember({"normalized", "rich"}));
  prepare->add_flag("--longform", prep.longform, "Also build the merged long-form manifest");
  prepare->add_option("--max-duration", prep.longform_options.max_duration,
                      "Long-form duration cap in seconds")
      ->capture_default_str();
  prep_cfg.Attach(prepare);

  // train
  CLI::App* train = app.add_subcommand("train", "Train a model from a run configuration");
  ConfigArgs train_cfg;
  int progress_every = 50;
  train_cfg.Attach(train);
  train->add_option("--progress-every", progress_every, "Steps between progress lines (0: off)")
      ->capture_default_str();

  // decode
  CLI::App* decode = app.add_subcommand("decode", "Decode a manifest into hypotheses JSONL");
  DecodeOptions dec;
  ConfigArgs dec_cfg;
  std::string dec_task = "both";
  std::optional<int> threads;
  decode->add_option("--checkpoint", dec.checkpoint, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--subwords", dec.subwords, "Subword model")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--manifest", dec.manifest, "Manifest to decode")->required();
  decode->add_option("--out", dec.out, "Output hypotheses JSONL")->required();
  decode->add_option("--task", dec_task, "verbatim, subtitle or both")->capture_default_str();
  decode->add_option("--threads", threads, "Worker threads (default: DUALASR_THREADS or 1)");
  dec_cfg.Attach(decode);

  // score
  CLI::App* score = app.add_subcommand("score", "WER/BLEU report with optional significance");
  ScoreOptions sc;
  std::string sc_task = "verbatim", sc_out;
  score->add_option("--hyps", sc.hyps, "Hypotheses JSONL")->required()->check(CLI::ExistingFile);
  score->add_option("--refs", sc.refs, "Reference manifest")->required()->check(CLI::ExistingFile);
  score->add_option("--compare", sc.compare, "Second hypotheses JSONL for significance tests")
      ->check(CLI::ExistingFile);
  score->add_option("--task", sc_task, "verbatim or subtitle")
      ->check(CLI::IsMember({"verbatim", "subtitle"}))
      ->capture_default_str();
  score->add_option("--equivalences", sc.equivalences, "Word equivalence table (TSV)")
      ->check(CLI::ExistingFile);
  score->add_option("--resamples", sc.resamples, "Bootstrap resamples")->capture_default_str();
  score->add_option("--seed", sc.seed, "Bootstrap seed")->capture_default_str();
  score->add_option("--per-utterance", sc.per_utterance_tsv, "Per-utterance TSV output");
  score->add_option("--out", sc_out, "Report JSON path (default: stdout)");

  // filter
  CLI::App* filter = app.add_subcommand("filter", "Drop subtitle records below a BLEU threshold");
  FilterOptions fo;
  std::string fo_task = "verbatim";
  filter->add_option("--manifest", fo.manifest, "Subtitle manifest")
      ->required()
      ->check(CLI::ExistingFile);
  filter->add_option("--hyps", fo.hyps, "Hypotheses JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--hyp-task", fo_task, "Hypothesis task compared to the subtitles")
      ->check(CLI::IsMember({"verbatim", "subtitle"}))
      ->capture_default_str();
  filter->add_option("--threshold", fo.threshold, "Minimum sentence BLEU (0-100)")->required();
  filter->add_option("--out", fo.out, "Filtered manifest")->required();
  filter->add_option("--report", fo.report, "Report JSON path (default: stdout)");
  filter->add_option("--equivalences", fo.equivalences, "Word equivalence table (TSV)")
      ->check(CLI::ExistingFile);

  // inspect
  CLI::App* inspect = app.add_subcommand("inspect", "Print a checkpoint summary as JSON");
  std::string inspect_path;
  inspect->add_option("checkpoint", inspect_path, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  // synth
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic tone-word corpus");
  std::string synth_out, synth_spec;
  uint64_t synth_seed = 0;
  std::optional<int> synth_n;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--spec", synth_spec, "Corpus specification JSON")->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();
  synth->add_option("--num-utterances", synth_n, "Override the number of utterances");

  // config
  CLI::App* config = app.add_subcommand("config", "Print the resolved run configuration");
  ConfigArgs show_cfg;
  show_cfg.Attach(config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*prepare) {
      const RunConfig c = prep_cfg.Resolve();
      prep.features = c.features;
      prep.seed = c.seed;
      if (text_mode == "normalized") prep.text_mode = TextMode::kNormalized;
      if (text_mode == "rich") prep.text_mode = TextMode::kRich;
      const PrepareResult r = Prepare(prep);
      for (const std::string& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::cerr << "prepared " << r.utterances << " utterances";
      if (prep.longform) std::cerr << ", " << r.longform_utterances << " long-form";
      std::cerr << " in " << prep.out_dir << "\n";
    } else if (*train) {
      const RunConfig c = train_cfg.Resolve();
      const TrainSummary s = TrainFromConfig(c, [&](const StepLog& l) {
        if (progress_every > 0 && l.step % progress_every == 0) {
          std::cerr << l.ToJson().dump() << "\n";
        }
      });
      std::cerr << "trained " << s.steps << " steps, " << s.epochs << " epochs, final accuracy "
                << s.final_accuracy << "\n";
    } else if (*decode) {
      const RunConfig c = dec_cfg.Resolve();
      dec.decode = c.decode;
      dec.features = c.features;
      dec.tasks = ParseTasks(dec_task);
      dec.threads = threads ? *threads : ThreadsFromEnv();
      if (dec.threads < 1) throw ConfigError("--threads must be at least 1");
      const size_t n = DecodeManifest(dec);
      std::cerr << "wrote " << n << " hypotheses to " << dec.out << "\n";
    } else if (*score) {
      sc.task = ParseTasks(sc_task).front();
      EmitJson(Score(sc), sc_out);
    } else if (*filter) {
      fo.hyp_task = ParseTasks(fo_task).front();
      const std::string report = fo.report;
      fo.report.clear();
      const FilterReport r = FilterManifest(fo);
      EmitJson(r.ToJson(), report);
    } else if (*inspect) {
      EmitJson(InspectCheckpoint(inspect_path), "");
    } else if (*synth) {
      SynthSpec spec = SynthSpec::Default();
      if (!synth_spec.empty()) {
        std::ifstream in(synth_spec);
        try {
          spec = SynthSpec::FromJson(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
          throw FormatError(synth_spec + ": " + e.what());
        }
      }
      if (synth_n) spec.num_utterances = *synth_n;
      const auto records = WriteSynthCorpus(spec, synth_seed, synth_out);
      std::cerr << "wrote " << records.size() << " utterances to " << synth_out << "\n";
    } else if (*config) {
      const RunConfig c = show_cfg.Resolve();
      c.Validate();
      std::cout << c.ToString();
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return *train ? kExitDiverged : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}

}  // namespace
}  // namespace dualasr

int main(int argc, char** argv) { return dualasr::Run(argc, argv); }
