#pragma once

#include <set>

#include "interactmove/io.hpp"
#include "interactmove/pipeline.hpp"

namespace interactmove {

// Everything the CLI can be configured with. A config file overrides any
// subset; unknown keys are rejected so typos do not pass silently.
struct AppConfig {
  SynthesisConfig synthesis;
  int corpus_size = 16;
  int scene_count = 4;
  PipelineConfig pipeline;
};

namespace detail {

class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ValidationError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ValidationError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const Json empty = Json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, name_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ValidationError("unknown config key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline AppConfig config_from_json(const Json& j) {
  AppConfig c;
  detail::Section root(j, "config");

  detail::Section syn = root.child("synthesis");
  syn.get("samples", c.synthesis.samples);
  syn.get("distractors", c.synthesis.distractors);
  syn.get("foot_eps", c.synthesis.foot_eps);
  syn.get("collision_delta", c.synthesis.collision_delta);
  syn.get("inflation", c.synthesis.inflation);
  syn.get("scene_spacing", c.synthesis.scene_spacing);
  syn.get("corpus_size", c.corpus_size);
  syn.get("scenes", c.scene_count);
  detail::Section contact = syn.child("contact");
  contact.get("motion_eps", c.synthesis.contact.motion_eps);
  contact.get("prox_eps", c.synthesis.contact.prox_eps);
  contact.get("surface_spacing", c.synthesis.contact.surface_spacing);
  contact.finish();
  detail::Section align = syn.child("alignment");
  align.get("t_w", c.synthesis.alignment.t_w);
  align.get("t_noise", c.synthesis.alignment.t_noise);
  align.get("resample", c.synthesis.alignment.resample);
  align.get("smoothing_rate", c.synthesis.alignment.smoothing_rate);
  align.get("signal_scale", c.synthesis.alignment.signal_scale);
  align.finish();
  syn.finish();

  PipelineConfig& p = c.pipeline;
  detail::Section model = root.child("model");
  model.get("frames", p.interaction.frames);
  model.get("cond_dim", p.interaction.cond_dim);
  model.get("object_points", p.interaction.object_points);
  model.get("scene_spacing", p.interaction.scene_spacing);
  model.get("voxel_resolution", p.interaction.voxel_resolution);
  model.get("affordance_cond_dim", p.affordance_cond_dim);
  model.get("affordance_hidden", p.affordance_hidden);
  model.get("interaction_hidden", p.interaction_hidden);
  model.get("sigma", p.affordance.sigma);
  model.get("tau", p.affordance.tau);
  model.get("guidance", p.guidance);
  model.get("auxiliary_losses", p.auxiliary_losses);
  detail::Section weights = model.child("weights");
  weights.get("lambda_contact", p.interaction.weights.lambda_contact);
  weights.get("lambda_penetration", p.interaction.weights.lambda_penetration);
  weights.get("contact_threshold", p.interaction.weights.contact_threshold);
  weights.get("guidance_step", p.interaction.weights.guidance_step);
  weights.get("guidance_repeats", p.interaction.weights.guidance_repeats);
  weights.finish();
  detail::Section local = model.child("local_scene");
  local.get("extent", p.interaction.local.extent);
  local.get("patches_x", p.interaction.local.patches_x);
  local.get("patches_y", p.interaction.local.patches_y);
  local.get("z_slabs", p.interaction.local.z_slabs);
  local.finish();
  model.finish();

  detail::Section train = root.child("training");
  train.get("affordance_epochs", p.affordance_training.epochs);
  train.get("interaction_epochs", p.interaction_training.epochs);
  int batch = p.affordance_training.batch_size;
  double lr = p.affordance_training.learning_rate, final_lr = p.affordance_training.final_learning_rate;
  train.get("batch_size", batch);
  train.get("learning_rate", lr);
  train.get("final_learning_rate", final_lr);
  train.finish();
  for (OptimizerConfig* o : {&p.affordance_training, &p.interaction_training}) {
    o->batch_size = batch;
    o->learning_rate = lr;
    o->final_learning_rate = final_lr;
  }

  detail::Section ev = root.child("eval");
  ev.get("collision_tolerance", p.eval.collision_tolerance);
  ev.get("foot_eps", p.eval.foot_eps);
  ev.get("max_joint_speed", p.eval.max_joint_speed);
  ev.get("bone_tolerance", p.eval.bone_tolerance);
  ev.get("multimodality_samples", p.eval.multimodality_samples);
  ev.get("surface_spacing", p.eval.surface_spacing);
  ev.finish();
  root.finish();

  require(c.corpus_size > 0 && c.scene_count > 0, "corpus size and scene count must be positive");
  require(c.synthesis.samples >= 0 && c.synthesis.distractors >= 0, "sample and distractor counts must be non-negative");
  require(p.affordance_training.epochs > 0 && p.interaction_training.epochs > 0 && batch > 0 && lr > 0.0,
          "training epochs, batch size and learning rate must be positive");
  validate_pipeline(p);
  return c;
}

inline AppConfig read_config(const std::string& path) { return config_from_json(read_json(path)); }

}  // namespace interactmove
