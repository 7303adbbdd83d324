#pragma once

#include <numeric>

#include "interactmove/affordance.hpp"
#include "interactmove/alignment.hpp"
#include "interactmove/metrics.hpp"
#include "interactmove/parallel.hpp"
#include "interactmove/tiny_denoiser.hpp"

namespace interactmove {

struct PipelineConfig {
  InteractionConfig interaction;
  AffordanceParams affordance;
  int affordance_cond_dim = 16;
  int affordance_hidden = 64;
  int interaction_hidden = 96;
  OptimizerConfig affordance_training{1000};
  OptimizerConfig interaction_training{2000};
  bool auxiliary_losses = false;  // contact and penetration terms during training
  bool guidance = true;           // penetration guidance while sampling
  EvalConfig eval;
};

inline void validate_pipeline(const PipelineConfig& c) {
  require(c.interaction.frames > 0 && c.interaction.object_points > 0 && c.interaction.cond_dim > 0,
          "interaction config needs positive frames, points and condition size");
  require(c.affordance.sigma > 0.0 && c.affordance.tau > 0.0 && c.affordance.tau < 1.0, "affordance needs sigma > 0 and tau in (0, 1)");
  require(c.affordance_cond_dim > 0 && c.affordance_hidden > 0 && c.interaction_hidden > 0, "model sizes must be positive");
  validate_weights(c.interaction.weights);
  validate_eval_config(c.eval);
}

// One training or evaluation item: a scene, the referred target and its
// motion. The motion is the model's output space, so frame counts must match.
inline InteractionExample make_example(const SceneGraph& scene, const std::string& target, const std::string& text,
                                       const HOISequence& seq, const PipelineConfig& cfg) {
  require(static_cast<int>(seq.motion.frame_count()) == cfg.interaction.frames, "example frame count differs from the model's");
  InteractionExample e;
  e.scene = prepare_interaction_scene(scene, target, cfg.interaction);
  e.text = text;
  e.state.motion = seq.motion;
  e.state.object = seq.object;
  e.affordance = compute_affordance(e.scene.object_local, e.state.object, e.state.motion, cfg.affordance);
  return e;
}

inline int hand_joint_count(const Skeleton& s = Skeleton::biped()) { return static_cast<int>(s.hand_joints().size()); }

inline TinyDenoiser fresh_model(const DenoiserShape& shape, const NoiseSchedule& sched, std::uint64_t seed) {
  TinyDenoiser m(shape, sched.steps());
  Rng rng(seed);
  m.initialize(rng);
  return m;
}

inline DenoiserShape affordance_shape(const PipelineConfig& cfg) {
  return affordance_denoiser_shape(cfg.interaction.object_points, hand_joint_count(), cfg.interaction.frames,
                                   cfg.affordance_cond_dim, cfg.affordance_hidden);
}

inline TrainingResult train_affordance_model(TinyDenoiser& model, const std::vector<InteractionExample>& examples,
                                             const PipelineConfig& cfg, const NoiseSchedule& sched) {
  std::vector<TrainingSample> data;
  for (const auto& e : examples) data.push_back(affordance_training_sample({e.scene.object_local, e.text, e.affordance}, cfg.affordance_cond_dim));
  return train_denoiser(model, data, sched, cfg.affordance_training);
}

inline TrainingResult train_interaction_model(TinyDenoiser& model, const std::vector<InteractionExample>& examples,
                                              const PipelineConfig& cfg, const NoiseSchedule& sched) {
  std::vector<TrainingSample> data;
  for (const auto& e : examples) data.push_back(interaction_training_sample(e, cfg.interaction));
  SampleAuxLoss aux;
  if (cfg.auxiliary_losses) aux = interaction_aux(examples, cfg.interaction.weights);
  return train_denoiser(model, data, sched, cfg.interaction_training, aux);
}

struct Generation {
  std::string target;
  AffordanceTensor affordance;
  InteractionState state;
};

// Affordance first, then motion conditioned on it.
inline Generation generate_for_target(const InteractionScene& scene, const std::string& text, const Denoiser& affordance_model,
                                      const Denoiser& interaction_model, const NoiseSchedule& sched, Rng& rng,
                                      const PipelineConfig& cfg) {
  Generation g;
  g.target = scene.target;
  g.affordance = generate_affordance(scene.object_local, text, hand_joint_count(), cfg.interaction.frames, affordance_model,
                                     cfg.affordance_cond_dim, sched, rng, cfg.affordance);
  g.state = generate_interaction(scene, g.affordance, text, interaction_model, sched, rng, cfg.guidance, cfg.interaction);
  return g;
}

// Text -> grounded target -> affordance -> motion.
inline Generation generate_from_text(const SceneGraph& scene, const std::string& text, const Vocabulary& vocab,
                                     const Denoiser& affordance_model, const Denoiser& interaction_model,
                                     const NoiseSchedule& sched, Rng& rng, const PipelineConfig& cfg) {
  const std::string target = ground(parse_text(text, vocab), scene);
  return generate_for_target(prepare_interaction_scene(scene, target, cfg.interaction), text, affordance_model,
                             interaction_model, sched, rng, cfg);
}

// ---------------------------------------------------------------------------
// Evaluation

struct ScoredMotion {
  double goal_distance = 0.0;
  double realism = 0.0;
  double non_collision = 0.0;
};

inline ScoredMotion score_motion(const InteractionState& s, const InteractionScene& scene, const EvalConfig& cfg) {
  const BodyProxy body(s.motion.skeleton);
  return {goal_distance(s.motion, scene.target_geometry, s.object, body, cfg.surface_spacing),
          physical_realism_proxy(s.motion, cfg),
          non_collision_score(s.motion, scene.object_local, s.object, scene.obstacles, body, cfg.collision_tolerance)};
}

inline MetricReport mean_report(const std::vector<ScoredMotion>& scores, const std::vector<double>& spreads) {
  MetricReport r;
  if (scores.empty()) return r;
  for (const auto& s : scores) {
    r.goal_distance += s.goal_distance;
    r.physical_realism += s.realism;
    r.non_collision += s.non_collision;
  }
  const double n = static_cast<double>(scores.size());
  r.goal_distance /= n;
  r.physical_realism /= n;
  r.non_collision /= n;
  if (!spreads.empty()) r.multimodality = std::accumulate(spreads.begin(), spreads.end(), 0.0) / static_cast<double>(spreads.size());
  return r;
}

// Metrics of given motions. Multimodality is taken over records sharing a
// text and left at zero when no text repeats.
inline MetricReport evaluate_motions(const std::vector<InteractionExample>& items, const EvalConfig& cfg, int workers = 1) {
  std::vector<ScoredMotion> scores(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) { scores[i] = score_motion(items[i].state, items[i].scene, cfg); });
  std::map<std::string, std::vector<MotionSequence>> by_text;
  for (const auto& e : items) by_text[e.text].push_back(e.state.motion);
  std::vector<double> spreads;
  for (const auto& [text, motions] : by_text) {
    if (motions.size() >= 2) spreads.push_back(multimodality(motions));
  }
  return mean_report(scores, spreads);
}

struct Prompt {
  InteractionScene scene;
  std::string text;
};

// K generations per prompt; goal, realism and collision are averaged over
// every generation, multimodality over prompts.
inline MetricReport evaluate_generation(const std::vector<Prompt>& prompts, const Denoiser& affordance_model,
                                        const Denoiser& interaction_model, const NoiseSchedule& sched,
                                        const PipelineConfig& cfg, std::uint64_t seed, int workers = 1) {
  const auto k = static_cast<std::size_t>(cfg.eval.multimodality_samples);
  std::vector<ScoredMotion> scores(prompts.size() * k);
  std::vector<MotionSequence> motions(prompts.size() * k);
  parallel_for(scores.size(), workers, [&](std::size_t i) {
    Rng rng(job_seed(seed, i));
    const Prompt& p = prompts[i / k];
    const Generation g = generate_for_target(p.scene, p.text, affordance_model, interaction_model, sched, rng, cfg);
    scores[i] = score_motion(g.state, p.scene, cfg.eval);
    motions[i] = g.state.motion;
  });
  std::vector<double> spreads;
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    spreads.push_back(multimodality({motions.begin() + static_cast<std::ptrdiff_t>(p * k), motions.begin() + static_cast<std::ptrdiff_t>((p + 1) * k)}));
  }
  return mean_report(scores, spreads);
}

// ---------------------------------------------------------------------------
// Memorization: train on a handful of items, then regenerate each from its
// own prompt.

struct MemorizationItem {
  std::string text;
  double goal_distance = 0.0;
  double non_collision = 0.0;
  double affordance_mae = 0.0;
  double contact_mae = 0.0;  // over entries the ground truth marks as contact
  double joint_error = 0.0;  // mean per-joint distance to the training motion
};

struct MemorizationResult {
  std::vector<MemorizationItem> items;
  double goal_distance = 0.0;
  double non_collision = 0.0;
  double affordance_mae = 0.0;
  double contact_mae = 0.0;
  double joint_error = 0.0;
  std::vector<double> affordance_loss;
  std::vector<double> interaction_loss;
};

inline MemorizationResult memorization_benchmark(const std::vector<InteractionExample>& examples, const PipelineConfig& cfg,
                                                 std::uint64_t seed, int workers = 1) {
  require(!examples.empty(), "memorization needs at least one example");
  const NoiseSchedule sched;
  PipelineConfig c = cfg;
  c.affordance_training.seed = job_seed(seed, 1);
  c.interaction_training.seed = job_seed(seed, 2);
  TinyDenoiser aff = fresh_model(affordance_shape(c), sched, job_seed(seed, 3));
  TinyDenoiser inter = fresh_model(interaction_denoiser_shape(Skeleton::biped(), c.interaction, c.interaction_hidden), sched, job_seed(seed, 4));
  MemorizationResult out;
  out.affordance_loss = train_affordance_model(aff, examples, c, sched).loss_curve;
  out.interaction_loss = train_interaction_model(inter, examples, c, sched).loss_curve;
  out.items.resize(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    const InteractionExample& e = examples[i];
    Rng rng(job_seed(seed, 100 + i));
    const Generation g = generate_for_target(e.scene, e.text, aff, inter, sched, rng, c);
    const ScoredMotion s = score_motion(g.state, e.scene, c.eval);
    MemorizationItem& item = out.items[i];
    item.text = e.text;
    item.goal_distance = s.goal_distance;
    item.non_collision = s.non_collision;
    const Eigen::ArrayXd err = (g.affordance.values.values - e.affordance.values.values).array().abs();
    item.affordance_mae = err.mean();
    const Eigen::ArrayXd on = (e.affordance.values.values.array() > 0.0).cast<double>();
    item.contact_mae = on.sum() > 0.0 ? (err * on).sum() / on.sum() : 0.0;
    item.joint_error = multimodality({g.state.motion, e.state.motion});
  });
  for (const auto& item : out.items) {
    out.goal_distance += item.goal_distance;
    out.non_collision += item.non_collision;
    out.affordance_mae += item.affordance_mae;
    out.contact_mae += item.contact_mae;
    out.joint_error += item.joint_error;
  }
  const double n = static_cast<double>(out.items.size());
  out.goal_distance /= n;
  out.non_collision /= n;
  out.affordance_mae /= n;
  out.contact_mae /= n;
  out.joint_error /= n;
  return out;
}

}  // namespace interactmove
