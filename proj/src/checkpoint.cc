// Copyright (c) 2026 The prosody-vc Authors
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

#include "vc/checkpoint.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vc/config.h"

namespace vc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary artifacts assume a little-endian host");

constexpr char kCheckpointMagic[8] = {'V', 'C', 'C', 'K', 'P', 'T', '0', '1'};
constexpr char kMelMagic[8] = {'V', 'C', 'M', 'E', 'L', '0', '0', '1'};

struct Tensor {
  std::string name;
  const Matrix* value;
};

void WriteContainer(const std::string& path, const char (&magic)[8], json header,
                    const std::vector<Tensor>& tensors) {
  json shapes = json::array();
  for (const Tensor& t : tensors)
    shapes.push_back({{"name", t.name}, {"rows", t.value->rows()}, {"cols", t.value->cols()}});
  header["tensors"] = shapes;
  const std::string text = header.dump();
  const uint64_t length = text.size();

  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw VcError("cannot write " + tmp);
    out.write(magic, 8);
    out.write(reinterpret_cast<const char*>(&length), sizeof(length));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Tensor& t : tensors) {
      // Row-major on disk regardless of Eigen's storage order.
      for (Eigen::Index r = 0; r < t.value->rows(); ++r)
        for (Eigen::Index c = 0; c < t.value->cols(); ++c) {
          const double v = (*t.value)(r, c);
          out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    if (!out) throw VcError("short write to " + tmp);
  }
  fs::rename(tmp, path);
}

struct Container {
  json header;
  std::map<std::string, Matrix> tensors;
};

Container ReadContainer(const std::string& path, const char (&magic)[8],
                        bool header_only = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VcError("cannot open " + path);
  char got[8];
  in.read(got, 8);
  if (!in || std::memcmp(got, magic, 8) != 0)
    throw ParseError(path + ": not a " + std::string(magic, 8) + " file");
  uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || length > (1ULL << 32)) throw ParseError(path + ": corrupt header length");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw ParseError(path + ": truncated header");
  Container c;
  try {
    c.header = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": bad header: " + e.what());
  }
  if (header_only) return c;
  for (const json& t : c.header.at("tensors")) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index col = 0; col < cols; ++col) {
        double v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        m(r, col) = v;
      }
    if (!in) throw ParseError(path + ": truncated tensor data");
    c.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }
  return c;
}

const Matrix& Need(const Container& c, const std::string& name, const std::string& path) {
  auto it = c.tensors.find(name);
  if (it == c.tensors.end()) throw ParseError(path + ": missing tensor " + name);
  return it->second;
}

json StageJson(const StageRecord& s) {
  return {{"index", s.index},       {"name", s.name},
          {"corpus", s.corpus},     {"loss", s.loss},
          {"trainable", s.trainable}, {"frozen", s.frozen},
          {"steps", s.steps},       {"initial_loss", s.initial_loss},
          {"final_loss", s.final_loss}};
}

json ProvenanceJson(const Provenance& p) {
  json stages = json::array();
  for (const auto& s : p.stages) stages.push_back(StageJson(s));
  return {{"strategy", p.strategy},
          {"stage_index", p.stage_index},
          {"step_count", p.step_count},
          {"seed", p.seed},
          {"config_hash", p.config_hash},
          {"freeze_refenc", p.freeze_refenc},
          {"representation", p.representation},
          {"target_speaker", p.target_speaker},
          {"stages", stages}};
}

Provenance ProvenanceFromJson(const json& j) {
  Provenance p;
  p.strategy = j.at("strategy").get<std::string>();
  p.stage_index = j.at("stage_index").get<int>();
  p.step_count = j.at("step_count").get<int64_t>();
  p.seed = j.at("seed").get<uint64_t>();
  p.config_hash = j.at("config_hash").get<std::string>();
  p.freeze_refenc = j.at("freeze_refenc").get<bool>();
  p.representation = j.at("representation").get<std::string>();
  p.target_speaker = j.at("target_speaker").get<std::string>();
  for (const json& s : j.at("stages")) {
    StageRecord r;
    r.index = s.at("index").get<int>();
    r.name = s.at("name").get<std::string>();
    r.corpus = s.at("corpus").get<std::string>();
    r.loss = s.at("loss").get<std::string>();
    r.trainable = s.at("trainable").get<std::vector<std::string>>();
    r.frozen = s.at("frozen").get<std::vector<std::string>>();
    r.steps = s.at("steps").get<int>();
    r.initial_loss = s.at("initial_loss").get<double>();
    r.final_loss = s.at("final_loss").get<double>();
    p.stages.push_back(std::move(r));
  }
  return p;
}

}  // namespace

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  const VcModel& m = ckpt.model;
  json params = json::array();
  std::vector<Tensor> tensors;
  for (int i = 0; i < m.params.size(); ++i) {
    const Parameter& p = m.params.at(i);
    params.push_back({{"group", p.group}, {"name", p.name}});
    tensors.push_back({"param:" + p.key(), &p.value});
  }
  json moments = json::array();
  for (const auto& [key, value] : ckpt.optimizer.first_moment) {
    auto v = ckpt.optimizer.second_moment.find(key);
    if (v == ckpt.optimizer.second_moment.end())
      throw VcError("optimizer state for " + key + " is incomplete");
    moments.push_back(key);
    tensors.push_back({"adam_m:" + key, &value});
    tensors.push_back({"adam_v:" + key, &v->second});
  }
  const Matrix mean = m.feature_mean;
  const Matrix std_dev = m.feature_std;
  tensors.push_back({"feature_mean", &mean});
  tensors.push_back({"feature_std", &std_dev});
  json header = {{"format", "vc-checkpoint"},
                 {"version", 1},
                 {"model_config", json::parse(ModelConfigToJson(m.config))},
                 {"speakers", m.speakers},
                 {"parameters", params},
                 {"adam_step", ckpt.optimizer.step},
                 {"adam_keys", moments},
                 {"provenance", ProvenanceJson(ckpt.provenance)},
                 {"charset", ckpt.charset}};
  if (ckpt.codebook) {
    header["codebook_corpus"] = ckpt.codebook->training_corpus_id;
    tensors.push_back({"codebook", &ckpt.codebook->centroids});
  }
  WriteContainer(path, kCheckpointMagic, header, tensors);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  const Container c = ReadContainer(path, kCheckpointMagic);
  const json& h = c.header;
  Checkpoint ckpt;
  try {
    VcModel& m = ckpt.model;
    m.config = ModelConfigFromJson(h.at("model_config").dump());
    m.speakers = h.at("speakers").get<std::vector<std::string>>();
    for (const json& p : h.at("parameters")) {
      const std::string group = p.at("group").get<std::string>();
      const std::string name = p.at("name").get<std::string>();
      m.params.Add(group, name, Need(c, "param:" + group + "/" + name, path));
    }
    m.feature_mean = Need(c, "feature_mean", path);
    m.feature_std = Need(c, "feature_std", path);
    ckpt.optimizer.step = h.at("adam_step").get<int64_t>();
    for (const json& k : h.at("adam_keys")) {
      const std::string key = k.get<std::string>();
      ckpt.optimizer.first_moment[key] = Need(c, "adam_m:" + key, path);
      ckpt.optimizer.second_moment[key] = Need(c, "adam_v:" + key, path);
    }
    ckpt.provenance = ProvenanceFromJson(h.at("provenance"));
    ckpt.charset = h.at("charset").get<std::vector<std::string>>();
    if (h.contains("codebook_corpus")) {
      FrameCodebook cb;
      cb.centroids = Need(c, "codebook", path);
      cb.training_corpus_id = h.at("codebook_corpus").get<std::string>();
      ckpt.codebook = std::move(cb);
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad checkpoint header: " + e.what());
  }
  return ckpt;
}

Provenance ReadProvenance(const std::string& path) {
  const Container c = ReadContainer(path, kCheckpointMagic, true);
  try {
    return ProvenanceFromJson(c.header.at("provenance"));
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad provenance: " + e.what());
  }
}

void SaveMelArtifact(const std::string& path, const MelArtifact& a) {
  json header = {{"format", "vc-mel"},
                 {"utterance_id", a.utterance_id},
                 {"strategy", a.strategy},
                 {"config_hash", a.config_hash},
                 {"seed", a.seed},
                 {"frame_shift_ms", a.mel.frame_shift_ms},
                 {"sample_rate", a.mel.sample_rate}};
  WriteContainer(path, kMelMagic, header, {{"mel", &a.mel.frames}});
}

MelArtifact LoadMelArtifact(const std::string& path) {
  const Container c = ReadContainer(path, kMelMagic);
  MelArtifact a;
  try {
    a.utterance_id = c.header.at("utterance_id").get<std::string>();
    a.strategy = c.header.at("strategy").get<std::string>();
    a.config_hash = c.header.at("config_hash").get<std::string>();
    a.seed = c.header.at("seed").get<uint64_t>();
    a.mel.frame_shift_ms = c.header.at("frame_shift_ms").get<double>();
    a.mel.sample_rate = c.header.at("sample_rate").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad mel header: " + e.what());
  }
  a.mel.frames = Need(c, "mel", path);
  return a;
}

}  // namespace vc
