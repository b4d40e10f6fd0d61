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

#include "dualasr/data/manifest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dualasr/errors.h"

namespace dualasr {

namespace {

using nlohmann::json;

std::string RequireString(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  if (!j[key].is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::optional<std::string> OptionalString(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw FormatError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::optional<double> OptionalNumber(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw FormatError(std::string("field '") + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

void UtteranceRecord::Validate() const {
  if (id.empty()) throw FormatError("record has an empty id");
  if (!verbatim && !subtitle) {
    throw FormatError("record '" + id + "' has neither verbatim nor subtitle text");
  }
  if (!(duration > 0.0)) throw FormatError("record '" + id + "' has non-positive duration");
  if (audio.start && audio.end && *audio.end <= *audio.start) {
    throw FormatError("record '" + id + "' has audio end <= start");
  }
}

json UtteranceRecord::ToJson() const {
  json audio_j = {{"path", audio.path}};
  if (audio.start) audio_j["start"] = *audio.start;
  if (audio.end) audio_j["end"] = *audio.end;
  json j = {{"id", id}, {"audio", audio_j}, {"speaker", speaker}};
  if (verbatim) j["verbatim"] = *verbatim;
  if (subtitle) j["subtitle"] = *subtitle;
  j["duration"] = duration;
  if (features) j["features"] = *features;
  return j;
}

UtteranceRecord UtteranceRecord::FromJson(const json& j) {
  if (!j.is_object()) throw FormatError("record must be a JSON object");
  static const std::set<std::string> kKnown = {"id",       "audio",    "speaker", "verbatim",
                                               "subtitle", "duration", "features"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.count(key)) throw FormatError("unknown field '" + key + "'");
  }
  UtteranceRecord r;
  r.id = RequireString(j, "id");
  if (!j.contains("audio") || !j["audio"].is_object()) {
    throw FormatError("field 'audio' must be an object with a 'path'");
  }
  r.audio.path = RequireString(j["audio"], "path");
  r.audio.start = OptionalNumber(j["audio"], "start");
  r.audio.end = OptionalNumber(j["audio"], "end");
  r.speaker = j.contains("speaker") ? RequireString(j, "speaker") : std::string();
  r.verbatim = OptionalString(j, "verbatim");
  r.subtitle = OptionalString(j, "subtitle");
  if (!j.contains("duration") || !j["duration"].is_number()) {
    throw FormatError("field 'duration' must be a number");
  }
  r.duration = j["duration"].get<double>();
  r.features = OptionalString(j, "features");
  r.Validate();
  return r;
}

std::vector<UtteranceRecord> ParseManifest(std::string_view text, const std::string& source) {
  std::vector<UtteranceRecord> out;
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    try {
      const json j = json::parse(line);
      UtteranceRecord r = UtteranceRecord::FromJson(j);
      if (!ids.insert(r.id).second) throw FormatError("duplicate id '" + r.id + "'");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      problems.push_back(where + "invalid JSON (" + e.what() + ")");
    } catch (const FormatError& e) {
      problems.push_back(where + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "manifest has " + std::to_string(problems.size()) + " invalid line(s):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw FormatError(msg);
  }
  return out;
}

std::vector<UtteranceRecord> ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("manifest: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseManifest(ss.str(), path);
}

std::string ManifestToString(const std::vector<UtteranceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    r.Validate();
    out += r.ToJson().dump() + "\n";
  }
  return out;
}

void WriteManifest(const std::string& path, const std::vector<UtteranceRecord>& records) {
  const std::string text = ManifestToString(records);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw FormatError("manifest: cannot write " + path);
    os << text;
    if (!os) throw FormatError("manifest: write failed for " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::string ResolvePath(const std::string& manifest_path, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

double TotalSeconds(const std::vector<UtteranceRecord>& records) {
  double s = 0.0;
  for (const auto& r : records) s += r.duration;
  return s;
}

double TotalHours(const std::vector<UtteranceRecord>& records) {
  return TotalSeconds(records) / 3600.0;
}

std::vector<UtteranceRecord> VerbatimPool(const std::vector<UtteranceRecord>& records) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records) {
    if (r.verbatim) out.push_back(r);
  }
  return out;
}

std::vector<UtteranceRecord> SubtitlePool(const std::vector<UtteranceRecord>& records) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records) {
    if (r.subtitle) out.push_back(r);
  }
  return out;
}

}  // namespace dualasr
