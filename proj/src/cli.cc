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

#include "vc/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vc/checkpoint.h"
#include "vc/pipelines.h"
#include "vc/recognizer.h"

namespace vc::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string OutputPath(const std::string& path) {
  const char* root = std::getenv("VC_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && !fs::path(path).is_absolute())
    return (fs::path(root) / path).lexically_normal().string();
  return path;
}

std::string ManifestFor(const ExperimentConfig& config, const std::string& role) {
  if (!config.has_manifest(role))
    throw ValidationError("config names no '" + role + "' manifest");
  return config.manifest(role);
}

Corpus LoadRole(const ExperimentConfig& config, DatasetRole role) {
  const std::string path = ManifestFor(config, RoleName(role));
  return LoadCorpus(LoadManifest(path, true), config.features, config.workers);
}

void WriteStageLog(const std::string& path, const StageLog& log) {
  std::map<int, double> style(log.style_distance.begin(), log.style_distance.end());
  std::ostringstream out;
  out.precision(10);
  out << "step\tloss\tl1\tstyle_distance\n";
  if (style.count(0)) out << 0 << "\t\t" << log.initial_l1 << '\t' << style[0] << '\n';
  for (size_t i = 0; i < log.loss.size(); ++i) {
    const int step = static_cast<int>(i) + 1;
    out << step << '\t' << log.loss[i] << '\t' << log.l1[i] << '\t';
    if (style.count(step)) out << style[step];
    out << '\n';
  }
  WriteFileAtomic(path, out.str());
}

json TraceJson(const ConversionTrace& t, const StyleEmbedding* style,
               const ExperimentConfig& config) {
  json j;
  j["utterance_id"] = t.utterance_id;
  j["strategy"] = t.strategy;
  if (!t.error.empty()) {
    j["error"] = t.error;
  } else {
    j["style_source"] = t.style_source;
    j["style_inputs"] = t.style_inputs;
    j["content_kind"] = t.content_kind;
    j["content_length"] = t.content_length;
    j["target_speaker"] = t.target_speaker;
    j["frames"] = t.frames;
    j["truncated"] = t.truncated;
    j["attention_transcript"] = t.attention_transcript;
    if (style != nullptr) {
      std::vector<double> v(style->vector.data(), style->vector.data() + style->vector.size());
      j["style"] = v;
    }
  }
  j["config_hash"] = ConfigHash(config);
  j["seed"] = config.seed;
  return j;
}

std::vector<json> ReadJsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<json> rows;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return rows;
}

// utterance_id -> hypothesis transcript.
std::map<std::string, std::string> LoadHypotheses(const ExperimentConfig& config,
                                                  const std::string& converted_dir) {
  std::map<std::string, std::string> out;
  if (!config.evaluation.hypotheses.empty()) {
    for (const json& row : ReadJsonl(config.evaluation.hypotheses))
      out[row.at("utterance_id").get<std::string>()] = row.at("text").get<std::string>();
    return out;
  }
  const fs::path traces = fs::path(converted_dir) / "traces.jsonl";
  if (!fs::exists(traces)) return out;
  for (const json& row : ReadJsonl(traces.string()))
    if (row.value("content_kind", "") == "text" && !row.contains("error"))
      out[row.at("utterance_id").get<std::string>()] =
          row.at("attention_transcript").get<std::string>();
  return out;
}

// Silhouette of RefEnc embeddings over the TTS corpus by speaker. Empty when
// the corpus cannot form two speaker clusters.
std::optional<double> SpeakerSeparation(const Checkpoint& ckpt, const Corpus& corpus,
                                        int workers) {
  if (!ckpt.model.has_gst()) return std::nullopt;
  std::map<std::string, int> counts;
  for (const UtteranceRecord& r : corpus.records) ++counts[r.speaker_id];
  if (counts.size() < 2) return std::nullopt;
  for (const auto& [speaker, n] : counts)
    if (n < 2) return std::nullopt;
  const EmbeddingSet set = CollectEmbeddings(ckpt, corpus, EmbeddingSource::kRefEnc, workers);
  return Clusterness(set.embeddings, set.speakers);
}

}  // namespace

ExperimentConfig ResolveConfig(const std::string& config_path, const Overrides& o) {
  ExperimentConfig c = LoadConfig(config_path);
  if (o.strategy) c.strategy = ParseStrategy(*o.strategy);
  if (o.freeze_refenc) c.freeze_refenc = true;
  if (o.representation) c.representation = ParseContentKind(*o.representation);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.output) c.output_dir = OutputPath(*o.output);
  c.Validate();
  return c;
}

std::string StageCheckpointPath(const std::string& output_dir, int stage,
                                const std::string& stage_name) {
  return (fs::path(output_dir) / "checkpoints" /
          ("stage" + std::to_string(stage + 1) + "_" + stage_name + ".ckpt"))
      .string();
}

std::string StageLogPath(const std::string& output_dir, int stage, const std::string& stage_name) {
  return (fs::path(output_dir) / "logs" /
          ("stage" + std::to_string(stage + 1) + "_" + stage_name + ".tsv"))
      .string();
}

std::string FinalCheckpointPath(const std::string& output_dir) {
  return (fs::path(output_dir) / "final.ckpt").string();
}

std::string SpeakerSeparationPath(const std::string& output_dir) {
  return (fs::path(output_dir) / "logs" / "speaker_separation.tsv").string();
}

std::string MelArtifactPath(const std::string& dir, const std::string& utterance_id) {
  return (fs::path(dir) / (utterance_id + ".mel")).string();
}

TrainSummary Train(const ExperimentConfig& config) {
  const StagePlan plan = MakeStagePlan(config.strategy, config.freeze_refenc, config.training);
  const std::string hash = ConfigHash(config);
  fs::create_directories(fs::path(config.output_dir) / "checkpoints");
  fs::create_directories(fs::path(config.output_dir) / "logs");
  WriteFileAtomic((fs::path(config.output_dir) / "config.json").string(),
                  ConfigToJson(config) + "\n");

  TrainSummary summary;
  const int num_stages = static_cast<int>(plan.stages.size());
  int first = 0;
  std::optional<Checkpoint> ckpt;
  for (int i = num_stages - 1; i >= 0; --i) {
    const std::string path = StageCheckpointPath(config.output_dir, i, plan.stages[i].name);
    if (!fs::exists(path)) continue;
    const Provenance p = ReadProvenance(path);
    if (p.config_hash != hash || p.stage_index != i + 1) {
      LogWarning(path + " was written by a different configuration; retraining");
      continue;
    }
    ckpt = LoadCheckpoint(path);
    first = i + 1;
    summary.stages_resumed = first;
    LogInfo("resuming after " + plan.stages[i].name + " from " + path);
    break;
  }

  std::map<DatasetRole, Corpus> corpora;
  auto corpus = [&](DatasetRole role) -> const Corpus& {
    auto it = corpora.find(role);
    if (it == corpora.end()) it = corpora.emplace(role, LoadRole(config, role)).first;
    return it->second;
  };

  if (!ckpt) {
    std::optional<Corpus> asr;
    if (config.representation == ContentKind::kFrameCode && config.has_manifest("asr"))
      asr = LoadRole(config, DatasetRole::kAsr);
    ckpt = InitCheckpoint(corpus(DatasetRole::kTtsPretrain), config,
                          config.strategy != Strategy::kBaseline, asr ? &*asr : nullptr);
  }
  const std::string separation_path = SpeakerSeparationPath(config.output_dir);
  {
    // Keep the rows of resumed stages only.
    std::vector<std::string> kept;
    std::ifstream in(separation_path);
    std::string line;
    for (int row = 0; std::getline(in, line); ++row)
      if (row > 0 && std::stoi(line) <= first) kept.push_back(line);
    in.close();
    fs::remove(separation_path);
    if (!kept.empty()) {
      std::ostringstream text;
      text << "stage\tname\tsilhouette\n";
      for (const std::string& k : kept) text << k << '\n';
      WriteFileAtomic(separation_path, text.str());
    }
  }
  for (int i = first; i < num_stages; ++i) {
    const StageSpec& spec = plan.stages[i];
    StageLog log;
    ckpt = RunStage(plan, i, corpus(spec.corpus), *ckpt, config, &log);
    WriteStageLog(StageLogPath(config.output_dir, i, spec.name), log);
    SaveCheckpoint(StageCheckpointPath(config.output_dir, i, spec.name), *ckpt);
    ++summary.stages_run;
    const std::optional<double> s =
        SpeakerSeparation(*ckpt, corpus(DatasetRole::kTtsPretrain), config.workers);
    if (!s) continue;
    const bool fresh = !fs::exists(separation_path);
    std::ofstream out(separation_path, std::ios::app);
    out.precision(10);
    if (fresh) out << "stage\tname\tsilhouette\n";
    out << i + 1 << '\t' << spec.name << '\t' << *s << '\n';
    if (!out) throw VcError("cannot write " + separation_path);
    LogInfo("RefEnc speaker separation after " + spec.name + ": " + std::to_string(*s));
  }
  summary.final_checkpoint = FinalCheckpointPath(config.output_dir);
  SaveCheckpoint(summary.final_checkpoint, *ckpt);
  return summary;
}

ConvertSummary Convert(const ExperimentConfig& config, const std::string& checkpoint_path,
                       const std::string& source_manifest, const std::string& output_dir) {
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  if (ckpt.provenance.strategy != StrategyName(config.strategy))
    throw ValidationError("checkpoint " + checkpoint_path + " was trained for the " +
                          ckpt.provenance.strategy + " strategy, not " +
                          StrategyName(config.strategy));
  if (ckpt.provenance.config_hash != ConfigHash(config))
    LogWarning("checkpoint config hash " + ckpt.provenance.config_hash +
               " differs from the conversion config " + ConfigHash(config));
  const std::vector<UtteranceRecord> records = LoadManifest(source_manifest, true);
  fs::create_directories(output_dir);

  struct Item {
    ConversionTrace trace;
    std::optional<StyleEmbedding> style;
  };
  std::vector<Item> items(records.size());
  ParallelFor(records.size(), config.workers, [&](size_t i) {
    const UtteranceRecord& r = records[i];
    try {
      const MelFeatures mel = LoadMel(r, config.features);
      vc::Conversion c = vc::Convert(config.strategy, r, mel, ckpt, config);
      MelArtifact art;
      art.utterance_id = r.utterance_id;
      art.strategy = StrategyName(config.strategy);
      art.config_hash = ConfigHash(config);
      art.seed = config.seed;
      art.mel = c.output.mel;
      SaveMelArtifact(MelArtifactPath(output_dir, r.utterance_id), art);
      items[i].trace = std::move(c.trace);
      items[i].style = std::move(c.style);
    } catch (const std::exception& e) {
      items[i].trace.utterance_id = r.utterance_id;
      items[i].trace.strategy = StrategyName(config.strategy);
      items[i].trace.error = e.what();
    }
  });

  ConvertSummary summary;
  std::string traces;
  for (const Item& item : items) {
    if (item.trace.error.empty()) {
      ++summary.converted;
    } else {
      ++summary.failed;
      LogWarning(item.trace.utterance_id + ": conversion failed: " + item.trace.error);
    }
    traces += TraceJson(item.trace, item.style ? &*item.style : nullptr, config).dump() + "\n";
  }
  summary.traces_path = (fs::path(output_dir) / "traces.jsonl").string();
  WriteFileAtomic(summary.traces_path, traces);
  LogInfo("converted " + std::to_string(summary.converted) + " of " +
          std::to_string(records.size()) + " utterances");
  return summary;
}

MetricReport Evaluate(const ExperimentConfig& config, const std::string& converted_dir,
                      const std::string& reference_manifest, const std::string& output_dir) {
  const std::vector<UtteranceRecord> refs = LoadManifest(reference_manifest, true);
  const std::map<std::string, std::string> hypotheses = LoadHypotheses(config, converted_dir);

  MetricReport report;
  std::vector<const UtteranceRecord*> present;
  for (const UtteranceRecord& r : refs) {
    if (fs::exists(MelArtifactPath(converted_dir, r.utterance_id)))
      present.push_back(&r);
    else
      report.missing.push_back(r.utterance_id);
  }
  if (present.empty())
    throw ValidationError("no converted artifact in " + converted_dir +
                          " matches an utterance of " + reference_manifest);

  std::vector<std::optional<UtteranceMetrics>> scored(present.size());
  std::vector<std::string> errors(present.size());
  ParallelFor(present.size(), config.workers, [&](size_t i) {
    const UtteranceRecord& r = *present[i];
    try {
      const MelArtifact art = LoadMelArtifact(MelArtifactPath(converted_dir, r.utterance_id));
      const MelFeatures reference = LoadMel(r, config.features);
      EvaluationInputs in;
      in.reference = &reference;
      in.converted = &art.mel;
      in.utterance_id = r.utterance_id;
      in.reference_text = r.transcript;
      if (auto it = hypotheses.find(r.utterance_id); it != hypotheses.end())
        in.hypothesis_text = it->second;
      scored[i] = EvaluateUtterance(in, config.features, config.evaluation,
                                    config.synthesis.griffin_lim_iterations);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (size_t i = 0; i < present.size(); ++i) {
    if (scored[i]) {
      report.utterances.push_back(*scored[i]);
    } else {
      LogWarning(present[i]->utterance_id + ": evaluation failed: " + errors[i]);
      report.missing.push_back(present[i]->utterance_id);
    }
  }
  if (report.utterances.empty()) throw VcError("every matched utterance failed to evaluate");
  if (!report.missing.empty())
    LogWarning(std::to_string(report.missing.size()) + " reference utterances not scored");
  report.ComputeMeans();

  fs::create_directories(output_dir);
  json meta;
  meta["config_hash"] = ConfigHash(config);
  meta["seed"] = config.seed;
  meta["strategy"] = StrategyName(config.strategy);
  WriteFileAtomic((fs::path(output_dir) / "report.txt").string(),
                  "# config " + ConfigHash(config) + " seed " + std::to_string(config.seed) +
                      "\n" + report.Table());
  WriteFileAtomic((fs::path(output_dir) / "report.jsonl").string(),
                  meta.dump() + "\n" + report.Jsonl());
  return report;
}

VisualizeSummary Visualize(const ExperimentConfig& config, const std::string& checkpoint_path,
                           const std::string& manifest, EmbeddingSource source,
                           ProjectionMethod method, const std::string& output_dir) {
  const Checkpoint ckpt = LoadCheckpoint(checkpoint_path);
  const Corpus corpus = LoadCorpus(LoadManifest(manifest, true), config.features, config.workers);
  VisualizeSummary s;
  s.embeddings = CollectEmbeddings(ckpt, corpus, source, config.workers);
  s.coordinates = Project2d(s.embeddings.embeddings, method, config.seed);
  s.clusterness = Clusterness(s.embeddings.embeddings, s.embeddings.speakers);

  fs::create_directories(output_dir);
  const std::string stem = (fs::path(output_dir) / (std::string(EmbeddingSourceName(source)) +
                                                     "_" + ProjectionMethodName(method)))
                               .string();
  WriteCoordinates(stem + ".tsv", s.embeddings, s.coordinates);
  std::ostringstream title;
  title << EmbeddingSourceName(source) << " embeddings, " << ProjectionMethodName(method)
        << ", silhouette " << s.clusterness;
  WriteScatterSvg(stem + ".svg", s.coordinates, s.embeddings.speakers, title.str());
  json j;
  j["mode"] = EmbeddingSourceName(source);
  j["method"] = ProjectionMethodName(method);
  j["representation"] = ckpt.provenance.representation;
  j["utterances"] = corpus.size();
  j["speakers"] = DistinctSpeakers(corpus.records).size();
  j["clusterness"] = s.clusterness;
  j["config_hash"] = ConfigHash(config);
  j["seed"] = config.seed;
  WriteFileAtomic(stem + ".json", j.dump(2) + "\n");
  return s;
}

namespace {

void AddCommon(CLI::App* cmd, std::string* config_path, Overrides* o) {
  cmd->add_option("--config", *config_path, "experiment config (JSON)")->required();
  cmd->add_option("--strategy", o->strategy, "baseline, spt or ttp")
      ->check(CLI::IsMember({"baseline", "spt", "ttp"}));
  cmd->add_flag("--freeze-refenc", o->freeze_refenc, "keep gst.* fixed during SPT fine-tuning");
  cmd->add_option("--representation", o->representation, "text or frame-code")
      ->check(CLI::IsMember({"text", "frame-code"}));
  cmd->add_option("--seed", o->seed, "random seed");
  cmd->add_option("--workers", o->workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--output", o->output, "output directory");
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"ASR+TTS voice conversion with source prosody transfer and target text prediction"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress logs");

  CLI::App* train = app.add_subcommand("train", "run every training stage of a strategy");
  AddCommon(train, &config_path, &o);

  std::string checkpoint, manifest, converted, reference, mode = "refenc", method = "tsne";
  CLI::App* convert = app.add_subcommand("convert", "convert a source manifest");
  AddCommon(convert, &config_path, &o);
  convert->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  convert->add_option("--manifest", manifest, "source manifest (default: config 'source')");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score converted mels");
  AddCommon(evaluate, &config_path, &o);
  evaluate->add_option("--converted", converted, "directory of converted artifacts")->required();
  evaluate->add_option("--reference", reference,
                       "reference manifest (default: config 'reference')");

  CLI::App* visualize = app.add_subcommand("visualize", "project style embeddings");
  AddCommon(visualize, &config_path, &o);
  visualize->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  visualize->add_option("--manifest", manifest, "utterances to embed (default: config 'tts')");
  visualize->add_option("--mode", mode, "refenc or tp")->check(CLI::IsMember({"refenc", "tp"}));
  visualize->add_option("--method", method, "pca or tsne")
      ->check(CLI::IsMember({"pca", "tsne"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const bool was_quiet = SetQuietLogging(quiet);
  int status = 0;
  try {
    const ExperimentConfig config = ResolveConfig(config_path, o);
    const fs::path out(config.output_dir);
    if (train->parsed()) {
      const TrainSummary s = Train(config);
      std::cout << "final checkpoint: " << s.final_checkpoint << " (" << s.stages_run
                << " stages run, " << s.stages_resumed << " resumed)\n";
    } else if (convert->parsed()) {
      const std::string src = manifest.empty() ? ManifestFor(config, "source") : manifest;
      const ConvertSummary s = Convert(config, checkpoint, src, (out / "converted").string());
      std::cout << "converted " << s.converted << ", failed " << s.failed << "; traces in "
                << s.traces_path << "\n";
    } else if (evaluate->parsed()) {
      const std::string ref = reference.empty() ? ManifestFor(config, "reference") : reference;
      const MetricReport r = Evaluate(config, converted, ref, (out / "evaluation").string());
      std::cout << r.Table();
    } else if (visualize->parsed()) {
      const std::string src = manifest.empty() ? ManifestFor(config, "tts") : manifest;
      const VisualizeSummary s =
          Visualize(config, checkpoint, src, ParseEmbeddingSource(mode),
                    ParseProjectionMethod(method), (out / "visualize").string());
      std::cout << "clusterness (silhouette by speaker): " << s.clusterness << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    status = 1;
  }
  SetQuietLogging(was_quiet);
  return status;
}

}  // namespace vc::cli
