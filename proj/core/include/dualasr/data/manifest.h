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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dualasr {

struct AudioRef {
  std::string path;
  std::optional<double> start;  // seconds
  std::optional<double> end;
};

// One manifest line. JSONL schema (version 1):
// {"id": str, "audio": {"path": str, "start"?: num, "end"?: num},
//  "speaker": str, "verbatim"?: str, "subtitle"?: str, "duration": num,
//  "features"?: str}
struct UtteranceRecord {
  std::string id;
  AudioRef audio;
  std::string speaker;
  std::optional<std::string> verbatim;
  std::optional<std::string> subtitle;
  double duration = 0.0;
  std::optional<std::string> features;  // feature file written by prepare

  // Throws FormatError when the id is empty, both texts are missing or the
  // duration is not positive.
  void Validate() const;
  nlohmann::json ToJson() const;
  static UtteranceRecord FromJson(const nlohmann::json& j);
};

// Throws FormatError naming the source and line for every schema violation
// found (all of them, not just the first) and for duplicate ids.
std::vector<UtteranceRecord> ParseManifest(std::string_view text,
                                           const std::string& source = "<manifest>");
std::vector<UtteranceRecord> ReadManifest(const std::string& path);
std::string ManifestToString(const std::vector<UtteranceRecord>& records);
void WriteManifest(const std::string& path, const std::vector<UtteranceRecord>& records);

// Relative paths inside a manifest are relative to the manifest's directory.
std::string ResolvePath(const std::string& manifest_path, const std::string& path);

double TotalSeconds(const std::vector<UtteranceRecord>& records);
double TotalHours(const std::vector<UtteranceRecord>& records);

// Records carrying a verbatim / subtitle text.
std::vector<UtteranceRecord> VerbatimPool(const std::vector<UtteranceRecord>& records);
std::vector<UtteranceRecord> SubtitlePool(const std::vector<UtteranceRecord>& records);

}  // namespace dualasr
