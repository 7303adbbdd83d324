// Synthesize a few toy interactions, train small affordance and interaction
// models on them, then generate one interaction from text and score it.

#include <cstdlib>
#include <iostream>

#include "interactmove/interactmove.hpp"

using namespace interactmove;

int main(int argc, char** argv) {
  const int samples = argc > 1 ? std::atoi(argv[1]) : 4;

  SynthesisConfig sc;
  sc.samples = samples;
  sc.seed = 1;
  const SynthesisResult data = synthesize_dataset(toy_corpus(samples, 1), toy_scenes(2, 1), sc);
  std::cout << "synthesized " << data.stats.emitted << " of " << data.stats.attempted << " samples\n";
  if (data.samples.empty()) return 1;
  for (const auto& s : data.samples) std::cout << "  " << s.id << ": " << s.text << " -> " << s.target << "\n";

  PipelineConfig cfg;
  cfg.affordance_training.epochs = 100;
  cfg.interaction_training.epochs = 200;
  std::vector<InteractionExample> examples;
  for (const auto& s : data.samples) examples.push_back(make_example(s.scene, s.target, s.text, s.aligned, cfg));

  const NoiseSchedule sched;
  TinyDenoiser aff = fresh_model(affordance_shape(cfg), sched, 2);
  TinyDenoiser inter = fresh_model(interaction_denoiser_shape(Skeleton::biped(), cfg.interaction, cfg.interaction_hidden), sched, 3);
  const auto al = train_affordance_model(aff, examples, cfg, sched).loss_curve;
  const auto il = train_interaction_model(inter, examples, cfg, sched).loss_curve;
  std::cout << "affordance loss " << al.front() << " -> " << al.back() << "\n";
  std::cout << "interaction loss " << il.front() << " -> " << il.back() << "\n";

  // the text alone picks the target out of the scene
  const auto& first = data.samples.front();
  Rng rng(4);
  const Generation g = generate_from_text(first.scene, first.text, Vocabulary::defaults(), aff, inter, sched, rng, cfg);
  const ScoredMotion score = score_motion(g.state, prepare_interaction_scene(first.scene, g.target, cfg.interaction), cfg.eval);
  std::cout << "generated \"" << first.text << "\" on " << g.target << ": goal " << score.goal_distance << " m, non-collision "
            << score.non_collision << "%, realism " << score.realism << "\n";
}
