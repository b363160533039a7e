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

#include "vc/config.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + " must be an object");
  }

  void Get(const char* key, int* out) {
    if (const json* v = Find(key)) {
      if (!v->is_number_integer()) Fail(key, "an integer");
      *out = v->get<int>();
    }
  }
  void Get(const char* key, uint64_t* out) {
    if (const json* v = Find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<int64_t>() >= 0))
        Fail(key, "a non-negative integer");
      *out = v->get<uint64_t>();
    }
  }
  void Get(const char* key, double* out) {
    if (const json* v = Find(key)) {
      if (!v->is_number()) Fail(key, "a number");
      *out = v->get<double>();
    }
  }
  void Get(const char* key, bool* out) {
    if (const json* v = Find(key)) {
      if (!v->is_boolean()) Fail(key, "a boolean");
      *out = v->get<bool>();
    }
  }
  void Get(const char* key, std::string* out) {
    if (const json* v = Find(key)) {
      if (!v->is_string()) Fail(key, "a string");
      *out = v->get<std::string>();
    }
  }
  // Empty optional section when absent.
  json Child(const char* key) {
    if (const json* v = Find(key)) {
      if (!v->is_object()) Fail(key, "an object");
      return *v;
    }
    return json::object();
  }
  std::string Path(const char* key) const { return path_ + "." + key; }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ValidationError("unknown config key " + path_ + "." + it.key());
  }

 private:
  const json* Find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void Fail(const char* key, const char* what) const {
    throw ValidationError(path_ + "." + key + " must be " + what);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadModel(Section& s, ModelConfig* m, bool with_derived) {
  if (with_derived) {
    s.Get("mel_dim", &m->mel_dim);
    s.Get("vocab_size", &m->vocab_size);
  }
  s.Get("encoder_dim", &m->encoder_dim);
  s.Get("speaker_dim", &m->speaker_dim);
  s.Get("prenet_dim1", &m->prenet_dim1);
  s.Get("prenet_dim2", &m->prenet_dim2);
  s.Get("prenet_dropout", &m->prenet_dropout);
  s.Get("decoder_dim", &m->decoder_dim);
  s.Get("min_attention_sigma", &m->min_attention_sigma);
  s.Get("refenc_channels", &m->refenc_channels);
  s.Get("query_dim", &m->query_dim);
  s.Get("num_tokens", &m->num_tokens);
  s.Get("style_dim", &m->style_dim);
  s.Get("style_attention_dim", &m->style_attention_dim);
  s.Get("tp_hidden", &m->tp_hidden);
  std::string target = m->tp_target == TpTarget::kWeights ? "weights" : "embedding";
  s.Get("tp_target", &target);
  if (target == "embedding") {
    m->tp_target = TpTarget::kEmbedding;
  } else if (target == "weights") {
    m->tp_target = TpTarget::kWeights;
  } else {
    throw ValidationError(s.Path("tp_target") + " must be embedding or weights");
  }
  s.Get("stop_weight", &m->stop_weight);
  s.Get("stop_pos_weight", &m->stop_pos_weight);
  s.Finish();
}

json ModelJson(const ModelConfig& m, bool with_derived) {
  json j = {{"encoder_dim", m.encoder_dim},
            {"speaker_dim", m.speaker_dim},
            {"prenet_dim1", m.prenet_dim1},
            {"prenet_dim2", m.prenet_dim2},
            {"prenet_dropout", m.prenet_dropout},
            {"decoder_dim", m.decoder_dim},
            {"min_attention_sigma", m.min_attention_sigma},
            {"refenc_channels", m.refenc_channels},
            {"query_dim", m.query_dim},
            {"num_tokens", m.num_tokens},
            {"style_dim", m.style_dim},
            {"style_attention_dim", m.style_attention_dim},
            {"tp_hidden", m.tp_hidden},
            {"tp_target", m.tp_target == TpTarget::kWeights ? "weights" : "embedding"},
            {"stop_weight", m.stop_weight},
            {"stop_pos_weight", m.stop_pos_weight}};
  if (with_derived) {
    j["mel_dim"] = m.mel_dim;
    j["vocab_size"] = m.vocab_size;
  }
  return j;
}

json ToJson(const ExperimentConfig& c, bool for_hash) {
  const FeatureConfig& f = c.features;
  const RecognizerConfig& r = c.recognizer;
  const TrainingConfig& t = c.training;
  const EvaluationConfig& e = c.evaluation;
  json j = {
      {"name", c.name},
      {"seed", c.seed},
      {"strategy", StrategyName(c.strategy)},
      {"freeze_refenc", c.freeze_refenc},
      {"representation", ContentKindName(c.representation)},
      {"data", c.manifests},
      {"features",
       {{"sample_rate", f.sample_rate},
        {"fft_size", f.fft_size},
        {"hop", f.hop},
        {"n_mels", f.n_mels},
        {"fmin", f.fmin},
        {"fmax", f.fmax},
        {"power_floor", f.power_floor}}},
      {"recognizer",
       {{"charset", r.charset},
        {"num_codes", r.num_codes},
        {"codebook_iterations", r.codebook_iterations},
        {"noise_rate", r.noise_rate}}},
      {"model", ModelJson(c.model, false)},
      {"training",
       {{"pretrain_steps", t.pretrain_steps},
        {"tp_pretrain_steps", t.tp_pretrain_steps},
        {"finetune_steps", t.finetune_steps},
        {"learning_rate", t.learning_rate},
        {"finetune_lr_scale", t.finetune_lr_scale},
        {"warmup_steps", t.warmup_steps},
        {"final_lr_fraction", t.final_lr_fraction},
        {"grad_clip", t.grad_clip},
        {"batch_size", t.batch_size},
        {"log_every", t.log_every}}},
      {"synthesis",
       {{"max_frames", c.synthesis.max_frames},
        {"griffin_lim_iterations", c.synthesis.griffin_lim_iterations}}},
      {"evaluation",
       {{"cepstrum_order", e.cepstrum_order},
        {"f0_min", e.f0_min},
        {"f0_max", e.f0_max},
        {"log_f0", e.log_f0},
        {"selection", SelectionModeName(e.selection)},
        {"hypotheses", e.hypotheses}}}};
  if (!for_hash) {
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
  }
  return j;
}

std::string Resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

const char* SelectionModeName(SelectionMode mode) {
  return mode == SelectionMode::kParallelReference ? "parallel-reference" : "no-reference";
}

SelectionMode ParseSelectionMode(const std::string& name) {
  if (name == "parallel-reference") return SelectionMode::kParallelReference;
  if (name == "no-reference") return SelectionMode::kNoReference;
  throw ValidationError("unknown selection mode '" + name +
                        "' (expected parallel-reference or no-reference)");
}

const char* StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kBaseline: return "baseline";
    case Strategy::kSpt: return "spt";
    case Strategy::kTtp: return "ttp";
  }
  return "?";
}

Strategy ParseStrategy(const std::string& name) {
  if (name == "baseline") return Strategy::kBaseline;
  if (name == "spt") return Strategy::kSpt;
  if (name == "ttp") return Strategy::kTtp;
  throw ValidationError("unknown strategy '" + name + "' (expected baseline, spt or ttp)");
}

const std::string& ExperimentConfig::manifest(const std::string& role) const {
  auto it = manifests.find(role);
  if (it == manifests.end())
    throw ValidationError("config.data has no '" + role + "' manifest");
  return it->second;
}

void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError("config: " + msg);
  };
  features.Validate();
  ModelConfig m = model;
  m.vocab_size = std::max(1, m.vocab_size);
  m.Validate();
  require(model.mel_dim == features.n_mels, "model.mel_dim must equal features.n_mels");
  require(workers >= 1, "workers must be >= 1");
  require(!output_dir.empty(), "output_dir must be non-empty");
  for (const auto& [role, path] : manifests) {
    if (role != "reference") ParseRole(role);
    require(!path.empty(), "data." + role + " is empty");
  }
  const RecognizerConfig& r = recognizer;
  require(!r.charset.empty(), "recognizer.charset is empty");
  Charset cs = Charset::FromString(r.charset);  // rejects duplicates
  require(r.num_codes >= 2, "recognizer.num_codes must be >= 2");
  require(r.codebook_iterations >= 1, "recognizer.codebook_iterations must be >= 1");
  require(r.noise_rate >= 0.0 && r.noise_rate <= 1.0, "recognizer.noise_rate must be in [0, 1]");
  const TrainingConfig& t = training;
  require(t.pretrain_steps >= 0 && t.tp_pretrain_steps >= 0 && t.finetune_steps >= 0,
          "step budgets must be >= 0");
  require(t.learning_rate > 0.0, "training.learning_rate must be > 0");
  require(t.finetune_lr_scale > 0.0, "training.finetune_lr_scale must be > 0");
  require(t.warmup_steps >= 0, "training.warmup_steps must be >= 0");
  require(t.final_lr_fraction > 0.0 && t.final_lr_fraction <= 1.0,
          "training.final_lr_fraction must be in (0, 1]");
  require(t.batch_size >= 0, "training.batch_size must be >= 0");
  require(t.log_every >= 1, "training.log_every must be >= 1");
  require(synthesis.max_frames >= 1, "synthesis.max_frames must be >= 1");
  require(synthesis.griffin_lim_iterations >= 0,
          "synthesis.griffin_lim_iterations must be >= 0");
  const EvaluationConfig& e = evaluation;
  require(e.cepstrum_order >= 1 && e.cepstrum_order < features.n_mels,
          "evaluation.cepstrum_order must be in [1, n_mels)");
  require(e.f0_min > 0.0 && e.f0_min < e.f0_max, "evaluation needs 0 < f0_min < f0_max");
  require(features.sample_rate >= 2.0 * e.f0_max,
          "features.sample_rate must be at least 2 * evaluation.f0_max");
  require(!(strategy != Strategy::kSpt && freeze_refenc),
          "freeze_refenc applies to the spt strategy only");
}

ExperimentConfig ParseConfig(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section root(j, "config");
  root.Get("name", &c.name);
  root.Get("seed", &c.seed);
  std::string strategy = StrategyName(c.strategy);
  root.Get("strategy", &strategy);
  c.strategy = ParseStrategy(strategy);
  root.Get("freeze_refenc", &c.freeze_refenc);
  std::string rep = ContentKindName(c.representation);
  root.Get("representation", &rep);
  c.representation = ParseContentKind(rep);
  root.Get("output_dir", &c.output_dir);
  root.Get("workers", &c.workers);

  const json data = root.Child("data");
  for (auto it = data.begin(); it != data.end(); ++it) {
    if (!it->is_string()) throw ValidationError("config.data." + it.key() + " must be a string");
    c.manifests[it.key()] = Resolve(base_dir, it->get<std::string>());
  }
  {
    const json sj = root.Child("features");
    Section s(sj, "config.features");
    FeatureConfig& f = c.features;
    s.Get("sample_rate", &f.sample_rate);
    s.Get("fft_size", &f.fft_size);
    s.Get("hop", &f.hop);
    s.Get("n_mels", &f.n_mels);
    s.Get("fmin", &f.fmin);
    s.Get("fmax", &f.fmax);
    s.Get("power_floor", &f.power_floor);
    s.Finish();
  }
  {
    const json sj = root.Child("recognizer");
    Section s(sj, "config.recognizer");
    RecognizerConfig& r = c.recognizer;
    s.Get("charset", &r.charset);
    s.Get("num_codes", &r.num_codes);
    s.Get("codebook_iterations", &r.codebook_iterations);
    s.Get("noise_rate", &r.noise_rate);
    s.Finish();
  }
  {
    const json sj = root.Child("model");
    Section s(sj, "config.model");
    ReadModel(s, &c.model, false);
  }
  c.model.mel_dim = c.features.n_mels;
  {
    const json sj = root.Child("training");
    Section s(sj, "config.training");
    TrainingConfig& t = c.training;
    s.Get("pretrain_steps", &t.pretrain_steps);
    s.Get("tp_pretrain_steps", &t.tp_pretrain_steps);
    s.Get("finetune_steps", &t.finetune_steps);
    s.Get("learning_rate", &t.learning_rate);
    s.Get("finetune_lr_scale", &t.finetune_lr_scale);
    s.Get("warmup_steps", &t.warmup_steps);
    s.Get("final_lr_fraction", &t.final_lr_fraction);
    s.Get("grad_clip", &t.grad_clip);
    s.Get("batch_size", &t.batch_size);
    s.Get("log_every", &t.log_every);
    s.Finish();
  }
  {
    const json sj = root.Child("synthesis");
    Section s(sj, "config.synthesis");
    s.Get("max_frames", &c.synthesis.max_frames);
    s.Get("griffin_lim_iterations", &c.synthesis.griffin_lim_iterations);
    s.Finish();
  }
  {
    const json sj = root.Child("evaluation");
    Section s(sj, "config.evaluation");
    EvaluationConfig& e = c.evaluation;
    s.Get("cepstrum_order", &e.cepstrum_order);
    s.Get("f0_min", &e.f0_min);
    s.Get("f0_max", &e.f0_max);
    s.Get("log_f0", &e.log_f0);
    std::string sel = SelectionModeName(e.selection);
    s.Get("selection", &sel);
    e.selection = ParseSelectionMode(sel);
    s.Get("hypotheses", &e.hypotheses);
    e.hypotheses = Resolve(base_dir, e.hypotheses);
    s.Finish();
  }
  root.Finish();

  if (const char* root_dir = std::getenv("VC_OUTPUT_ROOT");
      root_dir != nullptr && *root_dir != '\0' && !fs::path(c.output_dir).is_absolute()) {
    c.output_dir = (fs::path(root_dir) / c.output_dir).lexically_normal().string();
  } else {
    c.output_dir = Resolve(base_dir, c.output_dir);
  }
  c.Validate();
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfig(ss.str(), fs::path(path).parent_path().string());
  } catch (const VcError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string ConfigToJson(const ExperimentConfig& config) {
  return ToJson(config, false).dump(2);
}

std::string ConfigHash(const ExperimentConfig& config) {
  return Fnv1aHex(ToJson(config, true).dump());
}

std::string ModelConfigToJson(const ModelConfig& config) {
  return ModelJson(config, true).dump();
}

ModelConfig ModelConfigFromJson(const std::string& json_text) {
  const json j = json::parse(json_text);
  ModelConfig m;
  Section s(j, "model");
  ReadModel(s, &m, true);
  m.Validate();
  return m;
}

}  // namespace vc
