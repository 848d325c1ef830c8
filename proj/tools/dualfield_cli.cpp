// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

// dualfield: gen-scene, train-static, edit, render and eval.
// Exit codes: 0 success, 1 usage error, 2 runtime or backend error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dualfield/backends.hpp"
#include "dualfield/checkpoint.hpp"
#include "dualfield/config.hpp"
#include "dualfield/dataset.hpp"
#include "dualfield/errors.hpp"
#include "dualfield/idu.hpp"
#include "dualfield/image_io.hpp"
#include "dualfield/metrics.hpp"
#include "dualfield/renderer.hpp"
#include "dualfield/synthetic.hpp"
#include "dualfield/trainer.hpp"

namespace fs = std::filesystem;
using namespace dualfield;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Options shared by every command that reads a RunConfig.
struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool paper_scale = false;
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "TOML config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override one key, e.g. --set idu.n=5");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--paper-scale", o.paper_scale, "Start from paper-scale defaults");
  cmd->add_flag("--print-config", o.print_config, "Print the merged config and exit");
}

struct Merged {
  RunConfig config;
  std::set<std::string> explicit_keys;
};

// defaults < config file < --set < dedicated flags (applied by the caller).
Merged merge_config(const CommonOptions& o) {
  Merged m;
  m.config = o.paper_scale ? RunConfig::paper_scale() : RunConfig{};
  if (!o.config_path.empty()) m.explicit_keys = apply_toml_file(m.config, o.config_path);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    apply_override(m.config, key, kv.substr(eq + 1));
    m.explicit_keys.insert(key);
  }
  if (o.seed) m.config.seed = *o.seed;
  if (o.threads) m.config.threads = *o.threads;
  return m;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<fs::path> list_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

double mean_psnr_static(const DualFieldModel& model, const EditDataset& data,
                        const RunConfig& cfg) {
  RenderOptions ropts;
  ropts.n_samples = cfg.renderer_n_samples;
  ropts.background = cfg.background();
  ropts.rays = cfg.rays();
  ropts.threads = cfg.threads;
  ropts.seed = cfg.seed;
  double sum = 0.0;
  for (const auto& v : data.views) sum += psnr(render_static_only(model, v.pose, ropts), v.original);
  return data.views.empty() ? 0.0 : sum / static_cast<double>(data.views.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-field radiance field editing"};
  app.require_subcommand(1);

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Render a synthetic scene dataset");
  std::string gen_out, gen_recipe = "sphere";
  SyntheticOptions gen_opts;
  int gen_size = 64;
  gen->add_option("--out", gen_out, "Output dataset directory")->required();
  gen->add_option("--recipe", gen_recipe, "empty | sphere | spheres | large");
  gen->add_option("--views", gen_opts.n_views, "Number of ring views");
  gen->add_option("--size", gen_size, "Image height and width");
  gen->add_option("--seed", gen_opts.seed, "Seed (rotates the ring)");
  gen->add_option("--samples", gen_opts.n_samples, "Samples per ray");

  // train-static
  auto* train = app.add_subcommand("train-static", "Fit the static field to a dataset");
  CommonOptions train_common;
  add_common(train, train_common);
  std::string train_data, train_out, train_log;
  std::optional<int> train_iters;
  train->add_option("--data", train_data, "Dataset directory");
  train->add_option("--out", train_out, "Output checkpoint");
  train->add_option("--iters", train_iters, "Training iterations");
  train->add_option("--log", train_log, "Loss log CSV (default: <out>.csv)");

  // edit
  auto* edit = app.add_subcommand("edit", "Run iterative dataset update with a 2D editor");
  CommonOptions edit_common;
  add_common(edit, edit_common);
  std::string edit_data, edit_ckpt, edit_out;
  std::optional<std::string> edit_prompt, edit_backend, edit_endpoint, edit_embedder;
  std::optional<std::int64_t> edit_iters;
  bool no_sa = false, no_cci = false, resume = false;
  edit->add_option("--data", edit_data, "Dataset directory");
  edit->add_option("--ckpt", edit_ckpt, "Static checkpoint");
  edit->add_option("--out", edit_out, "Output directory");
  edit->add_option("--prompt", edit_prompt, "Edit instruction");
  edit->add_option("--backend", edit_backend,
                   "synthetic-oracle | synthetic-sticky | synthetic-identity | http");
  edit->add_option("--embedder", edit_embedder, "toy | http");
  edit->add_option("--endpoint", edit_endpoint, "Model service URL");
  edit->add_option("--iters", edit_iters, "Total training iterations");
  edit->add_flag("--no-sa", no_sa, "Disable annealed retreat rendering");
  edit->add_flag("--no-cci", no_cci, "Disable consistency weighting");
  edit->add_flag("--resume", resume, "Continue from <out>/edit.ckpt and edit.state");

  // render
  auto* render = app.add_subcommand("render", "Render a checkpoint");
  CommonOptions render_common;
  add_common(render, render_common);
  std::string render_ckpt, render_data, render_out;
  double render_gamma = 1.0;
  SyntheticOptions render_ring;
  int render_size = 64;
  std::optional<int> render_samples;
  render->add_option("--ckpt", render_ckpt, "Checkpoint");
  render->add_option("--data", render_data, "Dataset whose poses to render (default: ring)");
  render->add_option("--out", render_out, "Output directory");
  render->add_option("--gamma", render_gamma, "Retreat factor in [0,1]")
      ->check(CLI::Range(0.0, 1.0));
  render->add_option("--views", render_ring.n_views, "Ring views when no --data is given");
  render->add_option("--size", render_size, "Ring image size when no --data is given");
  render->add_option("--samples", render_samples, "Samples per ray");

  // eval
  auto* eval = app.add_subcommand("eval", "Compute metrics between image sets");
  CommonOptions eval_common;
  add_common(eval, eval_common);
  std::string eval_original, eval_edited, eval_out, eval_csv;
  CaptionPair captions{"A photograph of a scene", "A photograph of an edited scene"};
  std::optional<std::string> eval_embedder, eval_endpoint;
  eval->add_option("--original", eval_original, "Directory of original PNGs");
  eval->add_option("--edited", eval_edited, "Directory of edited PNGs");
  eval->add_option("--caption-original", captions.original_caption, "Caption of the original");
  eval->add_option("--caption-edited", captions.edited_caption, "Caption of the edit");
  eval->add_option("--embedder", eval_embedder, "toy | http");
  eval->add_option("--endpoint", eval_endpoint, "Model service URL");
  eval->add_option("--out", eval_out, "Report JSON (default: stdout)");
  eval->add_option("--csv", eval_csv, "Per-view CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto require = [](const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
  };

  try {
    if (*gen) {
      gen_opts.height = gen_opts.width = gen_size;
      const auto recipe = parse_scene_recipe(gen_recipe);
      const auto [scene, data] = generate_synthetic_scene(recipe, gen_opts);
      save_dataset(data, gen_out);
      std::cout << "wrote " << data.size() << " views to " << gen_out << "\n";
      return kExitOk;
    }

    if (*train) {
      Merged m = merge_config(train_common);
      if (train_iters) m.config.trainer_iterations = *train_iters;
      m.config.validate();
      if (train_common.print_config) {
        std::cout << print_config(m.config);
        return kExitOk;
      }
      require(train_data, "--data");
      require(train_out, "--out");
      const EditDataset data = load_dataset(train_data);
      const fs::path log_path =
          train_log.empty() ? fs::path(train_out).replace_extension(".csv") : fs::path(train_log);
      if (fs::exists(log_path)) fs::remove(log_path);
      TrainLog log(log_path);
      DualFieldModel model = train_static(data, m.config.train_config(), &log);
      model.blend = m.config.blend_state();
      save_checkpoint(train_out, model);
      std::cout << "static PSNR " << mean_psnr_static(model, data, m.config) << " dB\n";
      return kExitOk;
    }

    if (*edit) {
      Merged m = merge_config(edit_common);
      RunConfig& cfg = m.config;
      if (edit_prompt) cfg.idu_prompt = *edit_prompt;
      if (edit_backend) {
        cfg.backend_editor = *edit_backend;
        // A remote editor implies the remote embedder unless one was chosen explicitly.
        if (*edit_backend == "http" && !edit_embedder && !m.explicit_keys.count("backend.embedder")) {
          cfg.backend_embedder = "http";
        }
      }
      if (edit_embedder) cfg.backend_embedder = *edit_embedder;
      if (edit_endpoint) {
        cfg.backend_endpoint = *edit_endpoint;
      } else if (!m.explicit_keys.count("backend.endpoint")) {
        if (const char* env = std::getenv("DUALFIELD_ENDPOINT"); env && *env) {
          cfg.backend_endpoint = env;
        }
      }
      if (edit_iters) cfg.idu_total_iterations = *edit_iters;
      if (no_sa) cfg.idu_sa = false;
      if (no_cci) cfg.idu_cci = false;
      cfg.validate();
      if (edit_common.print_config) {
        std::cout << print_config(cfg);
        return kExitOk;
      }
      require(edit_data, "--data");
      require(edit_ckpt, "--ckpt");
      require(edit_out, "--out");
      if (cfg.idu_prompt.empty()) throw UsageError("--prompt (or idu.prompt) is required");

      EditDataset data = load_dataset(edit_data);
      data.prompt = cfg.idu_prompt;
      DualFieldModel model = load_checkpoint(edit_ckpt);
      model.blend = cfg.blend_state();
      const IDUConfig idu = cfg.idu_config();
      EditSession session = EditSession::start(std::move(model), std::move(data), idu);
      const fs::path out(edit_out);
      fs::create_directories(out);
      if (resume) {
        session.model = load_checkpoint(out / "edit.ckpt");
        load_session_state(out / "edit.state", session);
      } else {
        for (const char* f : {"train_log.csv", "rounds.csv"}) fs::remove(out / f);
      }
      const auto editor = make_editor(cfg.backend_settings());
      std::unique_ptr<EmbeddingBackend> embedder;
      if (cfg.idu_cci) embedder = make_embedder(cfg.backend_settings());
      TrainLog log(out / "train_log.csv");
      RoundLog rounds(out / "rounds.csv");
      RunEditOptions opts;
      opts.checkpoint_dir = out;
      opts.log = &log;
      opts.on_round = [&rounds](const RoundTrace& t) { rounds.append(t); };
      run_edit(session, idu, {editor.get(), embedder.get()}, opts);
      save_edits(session.dataset, out);
      std::cout << "edit finished at t = " << session.model.blend.t << " after "
                << session.rounds_done << " rounds; outputs in " << out.string() << "\n";
      return kExitOk;
    }

    if (*render) {
      Merged m = merge_config(render_common);
      if (render_samples) m.config.renderer_n_samples = *render_samples;
      m.config.validate();
      if (render_common.print_config) {
        std::cout << print_config(m.config);
        return kExitOk;
      }
      require(render_ckpt, "--ckpt");
      require(render_out, "--out");
      const DualFieldModel model = load_checkpoint(render_ckpt);
      std::vector<std::pair<std::string, CameraPose>> poses;
      if (!render_data.empty()) {
        for (const auto& v : load_dataset(render_data).views) poses.emplace_back(v.name, v.pose);
      } else {
        render_ring.height = render_ring.width = render_size;
        render_ring.seed = m.config.seed;
        const auto ring = ring_poses(render_ring);
        for (std::size_t i = 0; i < ring.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "frame_%03zu", i);
          poses.emplace_back(name, ring[i]);
        }
      }
      RenderOptions ropts;
      ropts.n_samples = m.config.renderer_n_samples;
      ropts.gamma = render_gamma;
      ropts.background = m.config.background();
      ropts.rays = m.config.rays();
      ropts.threads = m.config.threads;
      ropts.seed = m.config.seed;
      fs::create_directories(render_out);
      for (const auto& [name, pose] : poses) {
        write_png(fs::path(render_out) / (name + ".png"), render_image(model, pose, ropts));
      }
      std::cout << "rendered " << poses.size() << " views at gamma " << render_gamma << "\n";
      return kExitOk;
    }

    if (*eval) {
      Merged m = merge_config(eval_common);
      RunConfig& cfg = m.config;
      if (eval_embedder) cfg.backend_embedder = *eval_embedder;
      if (eval_endpoint) {
        cfg.backend_endpoint = *eval_endpoint;
      } else if (!m.explicit_keys.count("backend.endpoint")) {
        if (const char* env = std::getenv("DUALFIELD_ENDPOINT"); env && *env) {
          cfg.backend_endpoint = env;
        }
      }
      cfg.validate();
      if (eval_common.print_config) {
        std::cout << print_config(cfg);
        return kExitOk;
      }
      require(eval_original, "--original");
      require(eval_edited, "--edited");
      const auto orig_files = list_pngs(eval_original);
      const auto edit_files = list_pngs(eval_edited);
      if (orig_files.empty()) throw UsageError("no PNG files in " + eval_original);
      if (orig_files.size() != edit_files.size()) {
        throw UsageError("original and edited directories hold different numbers of PNGs");
      }
      std::vector<Image> originals, edited;
      for (std::size_t i = 0; i < orig_files.size(); ++i) {
        if (orig_files[i].filename() != edit_files[i].filename()) {
          throw UsageError("unmatched file " + edit_files[i].filename().string());
        }
        originals.push_back(read_png(orig_files[i]));
        edited.push_back(read_png(edit_files[i]));
      }
      const auto embedder = make_embedder(cfg.backend_settings());
      const MetricReport report = evaluate(originals, edited, captions, *embedder);
      const std::string json = report.to_json().dump(2) + "\n";
      if (eval_out.empty()) {
        std::cout << json;
      } else {
        std::ofstream(eval_out) << json;
        std::cout << "ssim " << report.ssim << " psnr " << report.psnr << "\n";
      }
      if (!eval_csv.empty()) std::ofstream(eval_csv) << report.to_csv();
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
