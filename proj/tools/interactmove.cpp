// interactmove: command-line driver for synthesis, grounding, affordances,
// training, generation, evaluation and export.
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 file errors,
// 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "interactmove/interactmove.hpp"

using namespace interactmove;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int workers = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

AppConfig load_config(const Common& c) { return c.config.empty() ? config_from_json(Json::object()) : read_config(c.config); }

std::string fixtures_dir() {
  if (const char* env = std::getenv("INTERACTMOVE_FIXTURES"); env && *env) return env;
  return INTERACTMOVE_SOURCE_FIXTURES;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_json(out, j);
  }
}

ToyPoison poison_from_name(const std::string& name) {
  if (name == "none") return ToyPoison::kNone;
  if (name == "foot") return ToyPoison::kFoot;
  if (name == "bounds") return ToyPoison::kBounds;
  if (name == "collision") return ToyPoison::kCollision;
  throw ValidationError("unknown poison '" + name + "' (none, foot, bounds, collision)");
}

std::vector<InteractionExample> dataset_examples(const std::string& dir, const PipelineConfig& cfg) {
  const DatasetManifest m = read_manifest(dir);
  require(!m.records.empty(), "dataset '" + dir + "' has no records");
  std::vector<InteractionExample> out;
  for (const auto& r : m.records) {
    const LoadedRecord lr = load_record(dir, r);
    out.push_back(make_example(lr.scene, r.target, r.text, lr.sequence, cfg));
  }
  return out;
}

Checkpoint load_model(const std::string& path, const DenoiserShape& expected, const char* role) {
  Checkpoint c = load_checkpoint(path);
  if (!(c.model.shape() == expected)) {
    throw ValidationError(std::string(role) + " checkpoint '" + path + "' does not match the configured model shape");
  }
  return c;
}

DenoiserShape interaction_shape(const PipelineConfig& p) {
  return interaction_denoiser_shape(Skeleton::biped(), p.interaction, p.interaction_hidden);
}

Json generation_json(const Generation& g, const std::string& text) {
  return {{"text", text}, {"target", g.target}, {"frames", g.state.motion.frame_count()}, {"motion", "motion.imar"},
          {"trajectory", "object.imar"}, {"affordance", "affordance.imar"}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"InteractMove pipeline: synthesize, ground, affordance, train, generate, eval, export"};
  app.require_subcommand(1);

  // synthesize
  Common syn_c;
  std::string syn_out, syn_poison = "none";
  int syn_samples = -1;
  auto* syn = app.add_subcommand("synthesize", "place, align, repair and filter toy captures into a dataset");
  add_common(syn, syn_c);
  syn->add_option("--out", syn_out, "output dataset directory")->required();
  syn->add_option("--samples", syn_samples, "number of synthesis jobs (overrides config)");
  syn->add_option("--poison", syn_poison, "corrupt the corpus: none, foot, bounds, collision");

  // ground
  Common gr_c;
  std::string gr_scene, gr_text, gr_out;
  auto* gr = app.add_subcommand("ground", "resolve a text to a scene object");
  add_common(gr, gr_c);
  gr->add_option("--scene", gr_scene, "scene JSON")->required();
  gr->add_option("--text", gr_text, "interaction text")->required();
  gr->add_option("--out", gr_out, "write the result here instead of stdout");

  // affordance
  auto* aff = app.add_subcommand("affordance", "compute or generate hand-object affordances");
  aff->require_subcommand(1);
  Common afc_c;
  std::string afc_dataset, afc_out;
  auto* afc = aff->add_subcommand("compute", "ground-truth affordances of every dataset record");
  add_common(afc, afc_c);
  afc->add_option("--dataset", afc_dataset, "dataset directory")->required();
  afc->add_option("--out", afc_out, "output directory")->required();
  Common afg_c;
  std::string afg_model, afg_scene, afg_text, afg_out;
  auto* afg = aff->add_subcommand("generate", "sample an affordance for a text in a scene");
  add_common(afg, afg_c);
  afg->add_option("--model", afg_model, "affordance checkpoint")->required();
  afg->add_option("--scene", afg_scene, "scene JSON")->required();
  afg->add_option("--text", afg_text, "interaction text")->required();
  afg->add_option("--out", afg_out, "output array file")->required();

  // train
  Common tr_c;
  std::string tr_dataset, tr_model, tr_out;
  int tr_epochs = -1;
  auto* tr = app.add_subcommand("train", "train the affordance or interaction denoiser");
  add_common(tr, tr_c);
  tr->add_option("--dataset", tr_dataset, "dataset directory")->required();
  tr->add_option("--model", tr_model, "affordance or interaction")->required()->check(CLI::IsMember({"affordance", "interaction"}));
  tr->add_option("--out", tr_out, "checkpoint path")->required();
  tr->add_option("--epochs", tr_epochs, "override the configured epoch count");

  // generate
  Common ge_c;
  std::string ge_scene, ge_text, ge_aff, ge_inter, ge_out;
  bool ge_no_guidance = false;
  auto* ge = app.add_subcommand("generate", "text -> grounding -> affordance -> motion and object trajectory");
  add_common(ge, ge_c);
  ge->add_option("--scene", ge_scene, "scene JSON")->required();
  ge->add_option("--text", ge_text, "interaction text")->required();
  ge->add_option("--affordance-model", ge_aff, "affordance checkpoint")->required();
  ge->add_option("--interaction-model", ge_inter, "interaction checkpoint")->required();
  ge->add_option("--out", ge_out, "output directory")->required();
  ge->add_flag("--no-guidance", ge_no_guidance, "disable penetration guidance");

  // eval
  Common ev_c;
  std::string ev_dataset, ev_aff, ev_inter, ev_out;
  auto* ev = app.add_subcommand("eval", "metrics of a dataset's motions, or of generations for its prompts");
  add_common(ev, ev_c);
  ev->add_option("--dataset", ev_dataset, "dataset directory (default: the shipped clean fixture)");
  ev->add_option("--affordance-model", ev_aff, "evaluate generations instead of stored motions");
  ev->add_option("--interaction-model", ev_inter, "interaction checkpoint for generation");
  ev->add_option("--out", ev_out, "write the report here instead of stdout");

  // export
  Common ex_c;
  std::string ex_dataset, ex_record, ex_out;
  auto* ex = app.add_subcommand("export", "OBJ meshes and CSV tables of one record");
  add_common(ex, ex_c);
  ex->add_option("--dataset", ex_dataset, "dataset directory")->required();
  ex->add_option("--record", ex_record, "record id")->required();
  ex->add_option("--out", ex_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*syn) {
      AppConfig cfg = load_config(syn_c);
      if (syn_samples >= 0) cfg.synthesis.samples = syn_samples;
      cfg.synthesis.seed = syn_c.seed;
      const auto corpus = poison_corpus(toy_corpus(cfg.corpus_size, syn_c.seed), poison_from_name(syn_poison));
      const auto scenes = toy_scenes(cfg.scene_count, syn_c.seed);
      const SynthesisResult r = synthesize_dataset(corpus, scenes, cfg.synthesis, Vocabulary::defaults(), syn_c.workers);
      write_dataset(syn_out, r, syn_c.seed);
      std::cerr << "synthesize: " << r.stats.emitted << " of " << r.stats.attempted << " samples kept\n";
    } else if (*gr) {
      load_config(gr_c);
      const SceneGraph scene = read_scene(gr_scene);
      const InteractionSpec spec = parse_text(gr_text, Vocabulary::defaults());
      emit({{"text", gr_text}, {"target", ground(spec, scene)}, {"spec", to_json(spec)}}, gr_out);
    } else if (*afc) {
      const AppConfig cfg = load_config(afc_c);
      const DatasetManifest m = read_manifest(afc_dataset);
      std::vector<AffordanceTensor> tensors(m.records.size());
      parallel_for(m.records.size(), afc_c.workers, [&](std::size_t i) {
        const LoadedRecord lr = load_record(afc_dataset, m.records[i]);
        const PointCloud local = object_point_samples(lr.scene.at(m.records[i].target).geometry, cfg.pipeline.interaction.object_points);
        tensors[i] = compute_affordance(local, lr.sequence.object, lr.sequence.motion, cfg.pipeline.affordance);
      });
      Json index = Json::array();
      for (std::size_t i = 0; i < m.records.size(); ++i) {
        const std::string file = m.records[i].id + ".affordance.imar";
        write_array((fs::path(afc_out) / file).string(), affordance_array(tensors[i]));
        const Tensor3& t = tensors[i].values;
        index.push_back({{"id", m.records[i].id}, {"affordance", file}, {"contact_entries", (t.values.array() > 0.0).count()}});
      }
      write_json((fs::path(afc_out) / "affordances.json").string(),
                 {{"sigma", cfg.pipeline.affordance.sigma}, {"tau", cfg.pipeline.affordance.tau}, {"records", index}});
    } else if (*afg) {
      const AppConfig cfg = load_config(afg_c);
      const PipelineConfig& p = cfg.pipeline;
      const Checkpoint ck = load_model(afg_model, affordance_shape(p), "affordance");
      const SceneGraph scene = read_scene(afg_scene);
      const std::string target = ground(parse_text(afg_text, Vocabulary::defaults()), scene);
      const PointCloud local = object_point_samples(scene.at(target).geometry, p.interaction.object_points);
      Rng rng(afg_c.seed);
      const AffordanceTensor a = generate_affordance(local, afg_text, hand_joint_count(), p.interaction.frames, ck.model,
                                                     p.affordance_cond_dim, ck.schedule, rng, p.affordance);
      write_array(afg_out, affordance_array(a));
    } else if (*tr) {
      AppConfig cfg = load_config(tr_c);
      PipelineConfig& p = cfg.pipeline;
      const bool is_aff = tr_model == "affordance";
      OptimizerConfig& opt = is_aff ? p.affordance_training : p.interaction_training;
      if (tr_epochs > 0) opt.epochs = tr_epochs;
      opt.seed = job_seed(tr_c.seed, 1);
      const auto examples = dataset_examples(tr_dataset, p);
      const NoiseSchedule sched;
      TinyDenoiser model = fresh_model(is_aff ? affordance_shape(p) : interaction_shape(p), sched, job_seed(tr_c.seed, 2));
      const TrainingResult r = is_aff ? train_affordance_model(model, examples, p, sched) : train_interaction_model(model, examples, p, sched);
      const fs::path out(tr_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      save_checkpoint(tr_out, model, sched);
      std::cerr << "train: " << tr_model << " loss " << r.loss_curve.front() << " -> " << r.loss_curve.back() << "\n";
    } else if (*ge) {
      AppConfig cfg = load_config(ge_c);
      PipelineConfig& p = cfg.pipeline;
      if (ge_no_guidance) p.guidance = false;
      const Checkpoint a = load_model(ge_aff, affordance_shape(p), "affordance");
      const Checkpoint m = load_model(ge_inter, interaction_shape(p), "interaction");
      require(a.schedule.betas() == m.schedule.betas(), "affordance and interaction checkpoints use different schedules");
      const SceneGraph scene = read_scene(ge_scene);
      Rng rng(ge_c.seed);
      const Generation g = generate_from_text(scene, ge_text, Vocabulary::defaults(), a.model, m.model, m.schedule, rng, p);
      write_array((fs::path(ge_out) / "motion.imar").string(), motion_array(g.state.motion));
      write_array((fs::path(ge_out) / "object.imar").string(), trajectory_array(g.state.object));
      write_array((fs::path(ge_out) / "affordance.imar").string(), affordance_array(g.affordance));
      write_json((fs::path(ge_out) / "generation.json").string(), generation_json(g, ge_text));
    } else if (*ev) {
      const AppConfig cfg = load_config(ev_c);
      const PipelineConfig& p = cfg.pipeline;
      const std::string dir = ev_dataset.empty() ? (fs::path(fixtures_dir()) / "clean").string() : ev_dataset;
      const auto examples = dataset_examples(dir, p);
      MetricReport report;
      std::string source = "dataset";
      if (ev_aff.empty() != ev_inter.empty()) throw ValidationError("eval needs both --affordance-model and --interaction-model");
      if (!ev_aff.empty()) {
        const Checkpoint a = load_model(ev_aff, affordance_shape(p), "affordance");
        const Checkpoint m = load_model(ev_inter, interaction_shape(p), "interaction");
        std::vector<Prompt> prompts;
        for (const auto& e : examples) prompts.push_back({e.scene, e.text});
        report = evaluate_generation(prompts, a.model, m.model, m.schedule, p, ev_c.seed, ev_c.workers);
        source = "generated";
      } else {
        report = evaluate_motions(examples, p.eval, ev_c.workers);
      }
      Json j = to_json(report);
      j["source"] = source;
      j["records"] = examples.size();
      emit(j, ev_out);
    } else if (*ex) {
      load_config(ex_c);
      const DatasetManifest m = read_manifest(ex_dataset);
      const DatasetRecord* rec = nullptr;
      for (const auto& r : m.records) {
        if (r.id == ex_record) rec = &r;
      }
      if (!rec) throw NotFoundError("dataset has no record '" + ex_record + "'");
      const LoadedRecord lr = load_record(ex_dataset, *rec);
      const fs::path out(ex_out);
      detail::write_file((out / "scene.obj").string(), scene_obj(lr.scene));
      SceneObject local = lr.scene.at(rec->target);
      local.pose = RigidTransform();
      detail::write_file((out / "object.obj").string(), scene_obj(SceneGraph{{local}, {}, {}, lr.scene.bounds}));
      detail::write_file((out / "object_trajectory.csv").string(), trajectory_csv(lr.sequence.object));
      detail::write_file((out / "joints.csv").string(), joints_csv(lr.sequence.motion));
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
