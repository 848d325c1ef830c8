// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/idu.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "dualfield/checkpoint.hpp"
#include "dualfield/errors.hpp"
#include "dualfield/renderer.hpp"

namespace dualfield {

double sa_temperature(double t, double T0) {
  if (!(t >= 0.0)) throw PreconditionError("sa_temperature: t must be nonnegative");
  if (!(T0 > 0.0)) throw PreconditionError("sa_temperature: T0 must be positive");
  return T0 / std::log10(10.0 + t);
}

bool sa_accept(double gamma, double temperature, double u) {
  return u < sa_acceptance_probability(gamma, temperature);
}

double sa_draw_gamma(SAState& sa) {
  const double candidate = sa.rng.uniform();
  const double u = sa.rng.uniform();
  return sa_accept(candidate, sa.temperature(), u) ? candidate : 1.0;
}

void IDUConfig::validate() const {
  if (d < 1 || n < 1) throw PreconditionError("IDU needs d >= 1 and n >= 1");
  if (total_iterations < 0) throw PreconditionError("total_iterations must be nonnegative");
  if (batch_size < 1 || n_samples < 1 || render_samples < 1) {
    throw PreconditionError("batch size and sample counts must be positive");
  }
  if (!(T0 > 0.0)) throw PreconditionError("T0 must be positive");
  editor.validate();
}

EditSession EditSession::start(DualFieldModel model, EditDataset dataset,
                               const IDUConfig& config) {
  config.validate();
  dataset.validate();
  EditSession s;
  s.model = std::move(model);
  s.model.dynamic_field = FeatureGrid(s.model.static_field.resolution(), 0.0f, 0.0f);
  s.model.blend.t = 0;
  s.model.blend.gamma = 1.0;
  s.dataset = std::move(dataset);
  s.sa.T0 = config.T0;
  s.sa.t = 0;
  s.sa.rng = Rng(hash_combine(config.seed, 0x5341u));
  s.optimizer = OptimizerState(s.model.dynamic_field.parameters().size(), config.adam);
  s.batch_rng = Rng(hash_combine(config.seed, 0x4254u));
  s.rounds_done = 0;
  s.ray_table = std::make_shared<const RayTable>(s.dataset, config.rays);
  return s;
}

namespace {

struct StagedEdit {
  std::size_t view;
  Image image;
  std::optional<double> score;
};

}  // namespace

RoundTrace idu_round(EditSession& session, const IDUConfig& config, const Backends& backends,
                     TrainLog* log) {
  config.validate();
  EditDataset& dataset = session.dataset;
  DualFieldModel& model = session.model;
  dataset.validate();
  model.validate();
  if (!backends.editor) throw PreconditionError("IDU round needs an editor backend");
  if (config.cci_enabled && !backends.embedder) {
    throw PreconditionError("consistency weighting needs an embedding backend");
  }
  if (!session.ray_table) session.ray_table = std::make_shared<const RayTable>(dataset, config.rays);

  RoundTrace trace;
  trace.round = session.rounds_done;
  trace.t_start = model.blend.t;
  trace.w_sigma = model.blend.w_sigma();
  trace.w_color = model.blend.w_color();
  SAState sa = session.sa;
  sa.t = model.blend.t;
  trace.temperature = sa.temperature();

  // Dataset update: everything is staged so a failing backend leaves the session untouched.
  std::vector<StagedEdit> staged;
  for (int k = 0; k < config.d; ++k) {
    const std::size_t view = (dataset.cursor + static_cast<std::size_t>(k)) % dataset.size();
    const View& v = dataset.views[view];
    ViewUpdate update;
    update.view = view;
    update.gamma = config.sa_enabled ? sa_draw_gamma(sa) : 1.0;
    update.retreated = update.gamma < 1.0;
    const auto [ws, wc] = model.effective_weights(update.gamma);
    update.w_sigma_used = ws;
    update.w_color_used = wc;

    RenderOptions ropts;
    ropts.n_samples = config.render_samples;
    ropts.gamma = update.gamma;
    ropts.background = config.background;
    ropts.rays = config.rays;
    ropts.threads = config.threads;
    ropts.seed = hash_combine(config.seed, static_cast<std::uint64_t>(trace.t_start) * 131 + view);
    const Image render = render_image(model, v.pose, ropts);

    Image edited;
    try {
      edited = backends.editor->edit(v.original, render, config.editor);
    } catch (const BackendError& e) {
      throw BackendError("edit of view " + std::to_string(view) + " failed: " + e.what(),
                         e.endpoint(), view);
    }
    if (!edited.same_shape(v.original)) {
      throw BackendError("editor returned a different resolution for view " +
                             std::to_string(view),
                         {}, view);
    }
    std::optional<double> score;
    if (config.cci_enabled) {
      try {
        score = consistency_score(edited, v.original, config.editor, *backends.embedder);
      } catch (const BackendError& e) {
        throw BackendError("scoring of view " + std::to_string(view) + " failed: " + e.what(),
                           e.endpoint(), view);
      }
      update.score = score;
    }
    staged.push_back({view, std::move(edited), score});
    trace.updates.push_back(update);
  }

  for (auto& s : staged) {
    View& v = dataset.views[s.view];
    v.current = std::move(s.image);
    if (s.score) v.score = s.score;
  }
  dataset.cursor = (dataset.cursor + static_cast<std::size_t>(config.d)) % dataset.size();
  session.sa = sa;

  // Model update on rays from the whole mixed dataset.
  const auto scores = dataset.scores();
  trace.view_weights = config.cci_enabled ? compute_normalized_weights(scores)
                                          : std::vector<double>(dataset.size(), 1.0);
  BackwardOptions bopts;
  bopts.n_samples = config.n_samples;
  bopts.strategy = config.strategy;
  bopts.background = config.background;
  bopts.rays = config.rays;
  bopts.field = TrainedField::kDynamic;
  bopts.gamma = 1.0;
  bopts.deterministic = config.deterministic;
  bopts.threads = config.threads;
  const double gamma_logged = trace.updates.front().gamma;
  double loss_sum = 0.0;
  for (int i = 0; i < config.n; ++i) {
    const RayBatch batch = sample_batch(dataset, *session.ray_table, config.batch_size,
                                        trace.view_weights, session.batch_rng);
    bopts.seed = hash_combine(config.seed, static_cast<std::uint64_t>(model.blend.t + i) + 1);
    const BackwardResult result = backward(model, batch, bopts);
    adam_step(model.dynamic_field.parameters(), result.grads.values, session.optimizer);
    loss_sum += result.loss;
    if (log) {
      log->append(model.blend.t + i + 1, result.loss, trace.w_sigma, trace.w_color, gamma_logged,
                  trace.temperature);
    }
  }
  trace.mean_loss = loss_sum / config.n;
  model.blend.t += config.n;
  session.sa.t = model.blend.t;
  session.rounds_done += 1;
  return trace;
}

std::vector<RoundTrace> run_edit(EditSession& session, const IDUConfig& config,
                                 const Backends& backends, const RunEditOptions& options) {
  config.validate();
  const std::int64_t total_rounds = (config.total_iterations + config.n - 1) / config.n;
  std::vector<RoundTrace> traces;
  const bool checkpoints = !options.checkpoint_dir.empty();
  if (checkpoints) std::filesystem::create_directories(options.checkpoint_dir);
  while (session.rounds_done < total_rounds) {
    traces.push_back(idu_round(session, config, backends, options.log));
    if (options.log) options.log->flush();
    if (options.on_round) options.on_round(traces.back());
    if (checkpoints && config.checkpoint_every > 0 &&
        session.rounds_done % config.checkpoint_every == 0 && session.rounds_done < total_rounds) {
      save_checkpoint(options.checkpoint_dir / "edit.ckpt", session.model);
      save_session_state(options.checkpoint_dir / "edit.state", session);
    }
  }
  if (checkpoints) {
    save_checkpoint(options.checkpoint_dir / "edit.ckpt", session.model);
    save_session_state(options.checkpoint_dir / "edit.state", session);
  }
  return traces;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "session state serialization assumes a little-endian host");

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "session state is truncated");
  }
  return v;
}

template <class T>
void get_array(std::ifstream& in, T* data, std::size_t n) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(T)))) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "session state is truncated");
  }
}

}  // namespace

void save_session_state(const std::filesystem::path& path, const EditSession& session) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write session state " + path.string());
  out.write("DFS1", 4);
  put<std::int64_t>(out, session.rounds_done);
  put<std::uint64_t>(out, session.dataset.cursor);
  put<std::uint64_t>(out, session.sa.rng.state());
  put<std::int64_t>(out, session.sa.t);
  put<double>(out, session.sa.T0);
  put<std::uint64_t>(out, session.batch_rng.state());
  put<std::int64_t>(out, session.optimizer.step_count);
  put<std::uint64_t>(out, session.optimizer.first_moment.size());
  out.write(reinterpret_cast<const char*>(session.optimizer.first_moment.data()),
            static_cast<std::streamsize>(session.optimizer.first_moment.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(session.optimizer.second_moment.data()),
            static_cast<std::streamsize>(session.optimizer.second_moment.size() * sizeof(double)));
  put<std::uint64_t>(out, session.dataset.size());
  for (const auto& v : session.dataset.views) {
    put<std::uint8_t>(out, v.score ? 1 : 0);
    put<double>(out, v.score.value_or(0.0));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v.current.height()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v.current.width()));
    out.write(reinterpret_cast<const char*>(v.current.data().data()),
              static_cast<std::streamsize>(v.current.data().size() * sizeof(float)));
  }
  if (!out) throw IoError("short write to " + path.string());
}

void load_session_state(const std::filesystem::path& path, EditSession& session) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kBadCheckpoint, "cannot open session state " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "DFS1", 4) != 0) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, path.string() + " is not a DFS1 session state");
  }
  EditSession s = session;
  s.rounds_done = get<std::int64_t>(in);
  s.dataset.cursor = get<std::uint64_t>(in);
  s.sa.rng.set_state(get<std::uint64_t>(in));
  s.sa.t = get<std::int64_t>(in);
  s.sa.T0 = get<double>(in);
  s.batch_rng.set_state(get<std::uint64_t>(in));
  s.optimizer.step_count = get<std::int64_t>(in);
  const auto n_params = get<std::uint64_t>(in);
  if (n_params != s.model.dynamic_field.parameters().size()) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "session state does not match the model grid");
  }
  s.optimizer.first_moment.resize(n_params);
  s.optimizer.second_moment.resize(n_params);
  get_array(in, s.optimizer.first_moment.data(), n_params);
  get_array(in, s.optimizer.second_moment.data(), n_params);
  const auto n_views = get<std::uint64_t>(in);
  if (n_views != s.dataset.size()) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "session state does not match the dataset");
  }
  for (auto& v : s.dataset.views) {
    const bool has = get<std::uint8_t>(in) != 0;
    const double score = get<double>(in);
    v.score = has ? std::optional<double>(score) : std::nullopt;
    const auto h = get<std::uint32_t>(in);
    const auto w = get<std::uint32_t>(in);
    if (static_cast<int>(h) != v.original.height() || static_cast<int>(w) != v.original.width()) {
      throw LoadError(LoadErrorKind::kBadCheckpoint, "session state image size mismatch");
    }
    v.current = Image(static_cast<int>(h), static_cast<int>(w));
    get_array(in, v.current.data().data(), v.current.data().size());
  }
  if (s.sa.t != s.model.blend.t) {
    throw LoadError(LoadErrorKind::kBadCheckpoint, "session state and checkpoint disagree on t");
  }
  session = std::move(s);
}

RoundLog::RoundLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open round log " + path.string());
  if (fresh) {
    out_ << "round,t_start,view,gamma,retreated,w_sigma_used,w_c_used,temperature,score,"
            "view_weights,mean_loss\n";
  }
  out_ << std::setprecision(10);
}

void RoundLog::append(const RoundTrace& trace) {
  std::string weights;
  for (std::size_t i = 0; i < trace.view_weights.size(); ++i) {
    if (i) weights += ';';
    std::ostringstream w;
    w << std::setprecision(10) << trace.view_weights[i];
    weights += w.str();
  }
  for (const auto& u : trace.updates) {
    out_ << trace.round << ',' << trace.t_start << ',' << u.view << ',' << u.gamma << ','
         << (u.retreated ? 1 : 0) << ',' << u.w_sigma_used << ',' << u.w_color_used << ','
         << trace.temperature << ',';
    if (u.score) out_ << *u.score;
    out_ << ',' << weights << ',' << trace.mean_loss << '\n';
  }
  out_.flush();
}

}  // namespace dualfield
