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

#include "vc/pipelines.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "vc/tp.h"

namespace vc {

namespace {

const std::vector<std::string> kTtsGroups = {kGroupEncoder, kGroupDecoder, kGroupSpeakerTable};
const std::vector<std::string> kGstGroups = {kGroupRefEnc, kGroupTokens};
const std::vector<std::string> kTpGroups = {kGroupTp};

std::vector<std::string> Join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

uint64_t Mix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<TrainingExample> MakeExamples(const Corpus& corpus, const Checkpoint& ckpt) {
  std::vector<TrainingExample> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const UtteranceRecord& r = corpus.records[i];
    TrainingExample ex;
    ex.utterance_id = r.utterance_id;
    ex.content = RecognizeContent(ckpt, r, corpus.mels[i]);
    ex.speaker_index = ckpt.model.SpeakerIndex(r.speaker_id);
    if (ex.speaker_index < 0)
      throw ValidationError("speaker '" + r.speaker_id + "' of " + r.utterance_id +
                            " has no embedding in the checkpoint");
    ex.target = ckpt.model.Normalize(corpus.mels[i].frames);
    out.push_back(std::move(ex));
  }
  return out;
}

StyleSource StyleFor(LossKind loss, const VcModel& model) {
  if (loss == LossKind::kTp) return StyleSource::kTp;
  return model.has_gst() ? StyleSource::kRefEnc : StyleSource::kZero;
}

std::string JoinNames(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
  return s;
}

}  // namespace

const char* LossName(LossKind loss) {
  return loss == LossKind::kGst ? "L_GST" : "L_TP";
}

std::vector<std::string> StageGroups(Strategy strategy, int stage_index) {
  switch (strategy) {
    case Strategy::kBaseline: return kTtsGroups;
    case Strategy::kSpt: return Join({kTtsGroups, kGstGroups});
    case Strategy::kTtp:
      return stage_index == 0 ? Join({kTtsGroups, kGstGroups})
                              : Join({kTtsGroups, kGstGroups, kTpGroups});
  }
  return {};
}

StagePlan MakeStagePlan(Strategy strategy, bool freeze_refenc,
                        const TrainingConfig& training) {
  if (freeze_refenc && strategy != Strategy::kSpt)
    throw ValidationError("freeze_refenc applies to the spt strategy only");
  const double lr = training.learning_rate;
  const double ft_lr = lr * training.finetune_lr_scale;
  StagePlan plan;
  plan.strategy = strategy;
  plan.freeze_refenc = freeze_refenc;
  const StageSpec gst_tts{"pretrain_gst_tts", DatasetRole::kTtsPretrain, LossKind::kGst, false,
                          Join({kTtsGroups, kGstGroups}), {}, training.pretrain_steps, lr};
  switch (strategy) {
    case Strategy::kBaseline:
      plan.stages = {
          {"pretrain_tts", DatasetRole::kTtsPretrain, LossKind::kGst, false, kTtsGroups, {},
           training.pretrain_steps, lr},
          {"finetune_tts", DatasetRole::kTargetFinetune, LossKind::kGst, false, kTtsGroups, {},
           training.finetune_steps, ft_lr}};
      break;
    case Strategy::kSpt:
      plan.stages = {
          gst_tts,
          {"finetune_spt", DatasetRole::kTargetFinetune, LossKind::kGst, false,
           freeze_refenc ? kTtsGroups : Join({kTtsGroups, kGstGroups}),
           freeze_refenc ? kGstGroups : std::vector<std::string>{}, training.finetune_steps,
           ft_lr}};
      break;
    case Strategy::kTtp:
      plan.stages = {
          gst_tts,
          {"pretrain_tp", DatasetRole::kTtsPretrain, LossKind::kTp, true, kTpGroups,
           Join({kTtsGroups, kGstGroups}), training.tp_pretrain_steps, lr},
          {"finetune_ttp", DatasetRole::kTargetFinetune, LossKind::kTp, false,
           Join({kTpGroups, kTtsGroups}), kGstGroups, training.finetune_steps, ft_lr}};
      break;
  }
  plan.Validate();
  return plan;
}

void StagePlan::Validate() const {
  const size_t expected = strategy == Strategy::kTtp ? 3 : 2;
  if (stages.size() != expected)
    throw ValidationError(std::string(StrategyName(strategy)) + " plan needs " +
                          std::to_string(expected) + " stages");
  for (size_t i = 0; i < stages.size(); ++i) {
    const StageSpec& s = stages[i];
    std::set<std::string> all;
    for (const auto& g : StageGroups(strategy, static_cast<int>(i))) all.insert(g);
    std::set<std::string> seen;
    for (const auto* list : {&s.trainable, &s.frozen})
      for (const auto& g : *list) {
        if (!all.count(g))
          throw ValidationError("stage " + s.name + " names unknown group " + g);
        if (!seen.insert(g).second)
          throw ValidationError("stage " + s.name + " lists group " + g + " twice");
      }
    if (seen != all)
      throw ValidationError("stage " + s.name + " leaves a group unclassified");
    if (s.trainable.empty()) throw ValidationError("stage " + s.name + " trains nothing");
    if (s.steps < 0) throw ValidationError("stage " + s.name + " has a negative budget");
  }
}

Corpus LoadCorpus(const std::vector<UtteranceRecord>& records,
                  const FeatureConfig& features, int workers) {
  Corpus c;
  c.records = records;
  c.mels.resize(records.size());
  ParallelFor(records.size(), workers,
              [&](size_t i) { c.mels[i] = LoadMel(records[i], features); });
  return c;
}

ContentSequence RecognizeContent(const Checkpoint& ckpt, const UtteranceRecord& record,
                                 const MelFeatures& mel) {
  const ContentKind kind = ParseContentKind(ckpt.provenance.representation);
  if (kind == ContentKind::kText) {
    if (ckpt.charset.empty()) throw ValidationError("checkpoint has no charset");
    return RecognizeText(record, Charset(ckpt.charset));
  }
  if (!ckpt.codebook) throw ValidationError("checkpoint has no frame codebook");
  return ExtractFrameCodes(mel, *ckpt.codebook);
}

Checkpoint InitCheckpoint(const Corpus& d_tts, const ExperimentConfig& config,
                          bool with_gst, const Corpus* asr) {
  if (d_tts.size() == 0) throw ValidationError("TTS pretraining corpus is empty");
  const std::vector<std::string> speakers = DistinctSpeakers(d_tts.records);
  if (speakers.size() < 2)
    LogWarning("TTS pretraining corpus has a single speaker; a multispeaker corpus is expected");
  Checkpoint ckpt;
  ckpt.provenance.strategy = StrategyName(config.strategy);
  ckpt.provenance.seed = config.seed;
  ckpt.provenance.config_hash = ConfigHash(config);
  ckpt.provenance.representation = ContentKindName(config.representation);

  ModelConfig mc = config.model;
  mc.mel_dim = config.features.n_mels;
  if (config.representation == ContentKind::kText) {
    ckpt.charset = SplitUtf8(config.recognizer.charset);
    mc.vocab_size = static_cast<int>(ckpt.charset.size());
  } else {
    const bool use_asr = asr != nullptr && asr->size() > 0;
    const Corpus& source = use_asr ? *asr : d_tts;
    ckpt.codebook = TrainCodebook(source.mels, config.recognizer.num_codes, config.seed,
                                  config.recognizer.codebook_iterations,
                                  use_asr ? "asr" : "tts");
    mc.vocab_size = config.recognizer.num_codes;
  }
  ckpt.model = InitModel(mc, speakers, with_gst, false, config.seed);

  Eigen::Index total = 0;
  for (const auto& m : d_tts.mels) {
    if (m.dim() != mc.mel_dim) throw DimensionError("corpus mel dimension mismatch");
    total += m.num_frames();
  }
  RowVector mean = RowVector::Zero(mc.mel_dim);
  for (const auto& m : d_tts.mels) mean += m.frames.colwise().sum();
  mean /= static_cast<double>(total);
  RowVector var = RowVector::Zero(mc.mel_dim);
  for (const auto& m : d_tts.mels)
    var += (m.frames.rowwise() - mean).array().square().colwise().sum().matrix();
  var /= static_cast<double>(total);
  ckpt.model.feature_mean = mean;
  ckpt.model.feature_std = var.array().sqrt().max(1e-2).matrix();
  return ckpt;
}

Checkpoint RunStage(const StagePlan& plan, int stage, const Corpus& corpus,
                    const Checkpoint& ckpt, const ExperimentConfig& config, StageLog* log) {
  plan.Validate();
  if (stage < 0 || stage >= static_cast<int>(plan.stages.size()))
    throw ValidationError("stage index out of range");
  const StageSpec& spec = plan.stages[stage];
  if (corpus.size() == 0) throw ValidationError(spec.name + ": corpus is empty");

  const auto& done = ckpt.provenance.stages;
  if (stage == 0) {
    if (!done.empty()) throw ValidationError(spec.name + " expects a fresh initialization");
  } else if (done.empty() || done.back().name != plan.stages[stage - 1].name) {
    throw ValidationError(spec.name + " needs a checkpoint from " +
                          plan.stages[stage - 1].name);
  }

  Checkpoint out = ckpt;
  VcModel& model = out.model;
  if (spec.corpus == DatasetRole::kTargetFinetune) {
    const auto speakers = DistinctSpeakers(corpus.records);
    if (speakers.size() != 1)
      throw ValidationError(spec.name + ": target corpus must hold exactly one speaker, got " +
                            std::to_string(speakers.size()));
    if (model.SpeakerIndex(speakers[0]) < 0) model.AddSpeaker(speakers[0]);
    out.provenance.target_speaker = speakers[0];
  }
  if (spec.loss == LossKind::kTp && !model.has_tp())
    AttachTp(&model, Mix(config.seed + static_cast<uint64_t>(stage)));
  for (const auto& g : StageGroups(plan.strategy, stage))
    if (!model.params.HasGroup(g))
      throw ValidationError(spec.name + ": checkpoint is missing parameter group " + g);
  for (const auto& g : model.params.Groups())
    if (std::find(spec.trainable.begin(), spec.trainable.end(), g) == spec.trainable.end() &&
        std::find(spec.frozen.begin(), spec.frozen.end(), g) == spec.frozen.end())
      throw ValidationError(spec.name + ": checkpoint has unexpected group " + g);

  const std::vector<TrainingExample> examples = MakeExamples(corpus, out);
  LossOptions options;
  options.style = StyleFor(spec.loss, model);
  options.grad_groups = spec.trainable;

  AdamConfig adam;
  adam.learning_rate = spec.learning_rate;
  adam.warmup_steps = std::min(config.training.warmup_steps, spec.steps);
  adam.decay_steps = std::max(0, spec.steps - adam.warmup_steps);
  adam.final_lr_fraction = config.training.final_lr_fraction;
  adam.grad_clip = config.training.grad_clip;
  AdamState state;

  const size_t n = examples.size();
  const size_t batch_size = config.training.batch_size <= 0
                                ? n
                                : std::min(n, static_cast<size_t>(config.training.batch_size));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 shuffle_rng(Mix(config.seed * 131 + static_cast<uint64_t>(stage)));
  size_t cursor = n;

  const bool track_style = spec.loss == LossKind::kTp && model.has_gst();
  StageLog local;
  StageLog& lg = log != nullptr ? *log : local;
  lg = StageLog();
  const LossValue initial = ComputeLoss(examples, model, options, nullptr);
  lg.initial_l1 = initial.l1;
  if (track_style) lg.style_distance.emplace_back(0, MeanStyleDistance(corpus, out));
  LogInfo(spec.name + ": " + std::to_string(n) + " utterances, " +
          std::to_string(spec.steps) + " steps, training " + JoinNames(spec.trainable) +
          ", initial loss " + std::to_string(initial.total));

  for (int step = 0; step < spec.steps; ++step) {
    std::vector<TrainingExample> batch;
    if (batch_size == n) {
      batch = examples;
    } else {
      for (size_t k = 0; k < batch_size; ++k) {
        if (cursor == n) {
          std::shuffle(order.begin(), order.end(), shuffle_rng);
          cursor = 0;
        }
        batch.push_back(examples[order[cursor++]]);
      }
    }
    LossOptions step_options = options;
    step_options.dropout_seed = Mix(config.seed ^ (static_cast<uint64_t>(stage) << 40) ^
                                    static_cast<uint64_t>(step));
    Gradients grads;
    const LossValue lv = ComputeLoss(batch, model, step_options, &grads);
    AdamUpdate(adam, spec.trainable, grads, &model.params, &state);
    lg.loss.push_back(lv.total);
    lg.l1.push_back(lv.l1);
    if ((step + 1) % config.training.log_every == 0 || step + 1 == spec.steps) {
      std::ostringstream msg;
      msg << spec.name << " step " << step + 1 << "/" << spec.steps << " loss " << lv.total
          << " l1 " << lv.l1 << " stop " << lv.stop;
      if (track_style) {
        lg.style_distance.emplace_back(step + 1, MeanStyleDistance(corpus, out));
        msg << " style-distance " << lg.style_distance.back().second;
      }
      LogInfo(msg.str());
    }
  }
  const LossValue final_loss =
      spec.steps > 0 ? ComputeLoss(examples, model, options, nullptr) : initial;
  lg.final_l1 = final_loss.l1;

  out.optimizer = std::move(state);
  Provenance& p = out.provenance;
  p.strategy = StrategyName(plan.strategy);
  p.stage_index = stage + 1;
  p.step_count += spec.steps;
  p.seed = config.seed;
  p.config_hash = ConfigHash(config);
  p.freeze_refenc = plan.freeze_refenc;
  StageRecord rec;
  rec.index = stage + 1;
  rec.name = spec.name;
  rec.corpus = RoleName(spec.corpus);
  rec.loss = LossName(spec.loss);
  rec.trainable = spec.trainable;
  rec.frozen = spec.frozen;
  rec.steps = spec.steps;
  rec.initial_loss = initial.total;
  rec.final_loss = final_loss.total;
  p.stages.push_back(std::move(rec));
  return out;
}

Checkpoint PretrainGstTts(const Corpus& d_tts, const ExperimentConfig& config,
                          StageLog* log, const Corpus* asr) {
  if (config.strategy == Strategy::kBaseline)
    throw ValidationError("the baseline strategy has no GST-TTS stage");
  const StagePlan plan = MakeStagePlan(config.strategy, false, config.training);
  return RunStage(plan, 0, d_tts, InitCheckpoint(d_tts, config, true, asr), config, log);
}

Checkpoint FinetuneSpt(const Corpus& d_trg, const Checkpoint& ckpt, bool freeze_refenc,
                       const ExperimentConfig& config, StageLog* log) {
  if (!ckpt.model.has_gst())
    throw ValidationError("finetune_spt: checkpoint has no gst.* groups");
  return RunStage(MakeStagePlan(Strategy::kSpt, freeze_refenc, config.training), 1, d_trg,
                  ckpt, config, log);
}

Checkpoint PretrainTp(const Corpus& d_tts, const Checkpoint& ckpt,
                      const ExperimentConfig& config, StageLog* log) {
  return RunStage(MakeStagePlan(Strategy::kTtp, false, config.training), 1, d_tts, ckpt,
                  config, log);
}

Checkpoint FinetuneTtp(const Corpus& d_trg, const Checkpoint& ckpt,
                       const ExperimentConfig& config, StageLog* log) {
  return RunStage(MakeStagePlan(Strategy::kTtp, false, config.training), 2, d_trg, ckpt,
                  config, log);
}

Checkpoint PretrainBaseline(const Corpus& d_tts, const ExperimentConfig& config,
                            StageLog* log, const Corpus* asr) {
  const StagePlan plan = MakeStagePlan(Strategy::kBaseline, false, config.training);
  return RunStage(plan, 0, d_tts, InitCheckpoint(d_tts, config, false, asr), config, log);
}

Checkpoint FinetuneBaseline(const Corpus& d_trg, const Checkpoint& ckpt,
                            const ExperimentConfig& config, StageLog* log) {
  return RunStage(MakeStagePlan(Strategy::kBaseline, false, config.training), 1, d_trg, ckpt,
                  config, log);
}

double MeanStyleDistance(const Corpus& corpus, const Checkpoint& ckpt) {
  if (corpus.size() == 0) throw ValidationError("empty corpus");
  double sum = 0.0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    const ContentSequence y = RecognizeContent(ckpt, corpus.records[i], corpus.mels[i]);
    const RowVector tp = PredictStyle(EncodeContent(y, ckpt.model), ckpt.model).vector;
    const RowVector ref = RefEnc(corpus.mels[i], ckpt.model).vector;
    sum += (tp - ref).cwiseAbs().sum();
  }
  return sum / static_cast<double>(corpus.size());
}

LossValue EvaluateLoss(const Corpus& corpus, const Checkpoint& ckpt, StyleSource style) {
  LossOptions options;
  options.style = style;
  return ComputeLoss(MakeExamples(corpus, ckpt), ckpt.model, options, nullptr);
}

std::string AttentionTranscript(const Matrix& attention, const ContentSequence& content,
                                const std::vector<std::string>& charset) {
  if (content.kind != ContentKind::kText) return "";
  std::string out;
  Eigen::Index last = -1;
  for (Eigen::Index t = 0; t < attention.rows(); ++t) {
    Eigen::Index pos;
    attention.row(t).maxCoeff(&pos);
    if (pos == last) continue;
    last = pos;
    const int id = content.symbols.at(static_cast<size_t>(pos));
    out += charset.at(static_cast<size_t>(id));
  }
  return out;
}

Conversion Convert(Strategy strategy, const UtteranceRecord& source,
                   const MelFeatures& source_mel, const Checkpoint& ckpt,
                   const ExperimentConfig& config) {
  if (ckpt.provenance.strategy != StrategyName(strategy))
    throw ValidationError("checkpoint was trained for the " + ckpt.provenance.strategy +
                          " strategy, not " + StrategyName(strategy));
  const std::string& target = ckpt.provenance.target_speaker;
  if (target.empty()) throw ValidationError("checkpoint has no target speaker; fine-tune first");
  const VcModel& model = ckpt.model;

  Conversion c;
  c.content = RecognizeContent(ckpt, source, source_mel);
  if (config.recognizer.noise_rate > 0.0)
    c.content = InjectRecognitionNoise(
        c.content, config.recognizer.noise_rate,
        Mix(config.seed ^ std::stoull(Fnv1aHex(source.utterance_id), nullptr, 16)));

  ConversionTrace& tr = c.trace;
  tr.utterance_id = source.utterance_id;
  tr.strategy = StrategyName(strategy);
  tr.content_kind = ContentKindName(c.content.kind);
  tr.content_length = c.content.length();
  tr.target_speaker = target;
  switch (strategy) {
    case Strategy::kBaseline:
      c.style = {RowVector::Zero(model.config.style_dim), std::nullopt};
      tr.style_source = "zero";
      break;
    case Strategy::kSpt:
      c.style = RefEnc(source_mel, model);
      tr.style_source = "refenc";
      tr.style_inputs = {"source_audio"};
      break;
    case Strategy::kTtp:
      c.style = PredictStyle(EncodeContent(c.content, model), model);
      tr.style_source = "tp";
      tr.style_inputs = {"recognized_content"};
      break;
  }
  c.output = Synthesize(c.content, LookupSpeaker(model, target), c.style, model,
                        config.synthesis.max_frames);
  tr.frames = static_cast<int>(c.output.mel.num_frames());
  tr.truncated = c.output.truncated;
  if (tr.truncated)
    LogWarning(source.utterance_id + ": decoding hit max_frames without a stop token");
  tr.attention_transcript = AttentionTranscript(c.output.attention, c.content, ckpt.charset);
  return c;
}

}  // namespace vc
