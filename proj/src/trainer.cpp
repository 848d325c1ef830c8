// Copyright 2026 The DualField Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualfield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <thread>

#include "dualfield/errors.hpp"

namespace dualfield {

double rgb_loss(std::span<const Vec3> predicted, std::span<const Vec3> target,
                std::span<const double> weight) {
  if (predicted.size() != target.size() || predicted.size() != weight.size()) {
    throw ContractError("rgb_loss: predicted, target and weight differ in length");
  }
  double loss = 0.0;
  for (std::size_t b = 0; b < predicted.size(); ++b) {
    loss += weight[b] * (predicted[b] - target[b]).squaredNorm();
  }
  return loss;
}

std::vector<double> compute_normalized_weights(std::span<const std::optional<double>> scores) {
  double sum = 0.0;
  std::size_t scored = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : scores) {
    if (!s) continue;
    if (!(*s >= 0.0)) throw PreconditionError("consistency scores must be nonnegative");
    sum += *s;
    lo = std::min(lo, *s);
    hi = std::max(hi, *s);
    ++scored;
  }
  std::vector<double> weights(scores.size(), 1.0);
  if (scored == 0) return weights;
  if (!(sum > 0.0)) throw NormalizationError("all consistency scores are zero");
  if (lo == hi) return weights;
  const double mean = sum / static_cast<double>(scored);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) weights[i] = *scores[i] / mean;
  }
  return weights;
}

namespace {

struct RayScratch {
  std::vector<TrilinearStencil> stencils;
  std::vector<double> sigma;
  std::vector<double> h_density;
  std::vector<Vec3> rgb;
  std::vector<double> deltas;
  std::vector<double> trans;
  std::vector<double> weights;

  void resize(std::size_t n) {
    stencils.resize(n);
    sigma.resize(n);
    h_density.resize(n);
    rgb.resize(n);
    deltas.resize(n);
    trans.resize(n);
    weights.resize(n);
  }
};

// Forward + backward for one ray; accumulates into `grad` and returns the
// weighted squared error.
double process_ray(const DualFieldModel& model, const TrainingRay& tr, const BackwardOptions& opts,
                   double ws, double wc, double scale_sigma, double scale_color, Rng& rng,
                   RayScratch& scratch, std::span<double> grad, Vec3& predicted) {
  const auto clipped = clip_to_bounds(tr.ray, opts.rays);
  if (!clipped) {
    predicted = opts.background;
    return tr.weight * (predicted - tr.target).squaredNorm();
  }
  const RaySamples samples = sample_along_ray(*clipped, opts.n_samples, opts.strategy, rng);
  const std::size_t n = samples.size();
  scratch.resize(n);
  const GridResolution res = model.static_field.resolution();
  const Vec3& lo = opts.rays.bounds.lo;
  const Vec3& hi = opts.rays.bounds.hi;

  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    auto& st = scratch.stencils[i];
    st = trilinear_stencil(res, lo.cwiseMax(samples.positions[i].cwiseMin(hi)));
    const HiddenFeatures h = fuse(sample_features(model.static_field, st),
                                  sample_features(model.dynamic_field, st), ws, wc);
    const Radiance r = decode(h);
    scratch.h_density[i] = h.density;
    scratch.sigma[i] = r.sigma;
    scratch.rgb[i] = r.rgb;
    scratch.deltas[i] = samples.deltas[i];
    const double t_i = std::exp(-depth);
    depth += r.sigma * samples.deltas[i];
    scratch.trans[i] = t_i;
    scratch.weights[i] = t_i - std::exp(-depth);
    color += scratch.weights[i] * r.rgb;
  }
  const double residual_t = std::exp(-depth);
  color += residual_t * opts.background;
  predicted = color;
  const Vec3 residual = color - tr.target;
  const double loss = tr.weight * residual.squaredNorm();
  if (scale_sigma == 0.0 && scale_color == 0.0) return loss;

  const Vec3 d_color_out = 2.0 * tr.weight * residual;
  const std::size_t vc = model.static_field.vertex_count();
  double* g_density = grad.data();
  double* g_color = grad.data() + vc;
  Vec3 suffix = residual_t * opts.background;
  for (std::size_t k = n; k-- > 0;) {
    const Vec3& c = scratch.rgb[k];
    const double w = scratch.weights[k];
    const double t_next = scratch.trans[k] - w;
    const double d_sigma = scratch.deltas[k] * d_color_out.dot(t_next * c - suffix);
    suffix += w * c;
    const double hd = scratch.h_density[k];
    const bool active = hd > -kDensityClamp && hd < kDensityClamp;
    const double g_hs = active ? d_sigma * scratch.sigma[k] * scale_sigma : 0.0;
    const Vec3 g_hc = (w * scale_color) * d_color_out.cwiseProduct(
                                              c.cwiseProduct(Vec3::Ones() - c));
    const auto& st = scratch.stencils[k];
    for (int j = 0; j < 8; ++j) {
      const std::size_t idx = st.index[j];
      const double tw = st.weight[j];
      g_density[idx] += tw * g_hs;
      g_color[3 * idx] += tw * g_hc.x();
      g_color[3 * idx + 1] += tw * g_hc.y();
      g_color[3 * idx + 2] += tw * g_hc.z();
    }
  }
  return loss;
}

}  // namespace

BackwardResult backward(const DualFieldModel& model, const RayBatch& batch,
                        const BackwardOptions& opts) {
  if (batch.rays.empty()) throw PreconditionError("backward: empty ray batch");
  model.validate();
  const auto [ws, wc] = model.effective_weights(opts.gamma);
  const bool dynamic = opts.field == TrainedField::kDynamic;
  const double scale_sigma = dynamic ? ws : 1.0 - ws;
  const double scale_color = dynamic ? wc : 1.0 - wc;

  BackwardResult out;
  out.grads.vertex_count = model.static_field.vertex_count();
  const std::size_t n_params = model.static_field.parameters().size();
  out.grads.values.assign(n_params, 0.0);
  out.predicted.resize(batch.rays.size());
  std::vector<double> losses(batch.rays.size());

  auto run = [&](std::size_t begin, std::size_t end, std::span<double> grad) {
    RayScratch scratch;
    for (std::size_t b = begin; b < end; ++b) {
      Rng rng(hash_combine(opts.seed, b));
      losses[b] = process_ray(model, batch.rays[b], opts, ws, wc, scale_sigma, scale_color, rng,
                              scratch, grad, out.predicted[b]);
    }
  };

  std::size_t workers = opts.threads > 0 ? static_cast<std::size_t>(opts.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  if (opts.deterministic || workers <= 1) {
    run(0, batch.rays.size(), out.grads.values);
  } else {
    workers = std::min(workers, batch.rays.size());
    std::vector<std::vector<double>> partial(workers, std::vector<double>(n_params, 0.0));
    const std::size_t chunk = (batch.rays.size() + workers - 1) / workers;
    parallel_for(workers, static_cast<int>(workers), [&](std::size_t wb, std::size_t we) {
      for (std::size_t w = wb; w < we; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(batch.rays.size(), begin + chunk);
        if (begin < end) run(begin, end, partial[w]);
      }
    });
    for (const auto& p : partial) {
      for (std::size_t i = 0; i < n_params; ++i) out.grads.values[i] += p[i];
    }
  }
  out.loss = std::accumulate(losses.begin(), losses.end(), 0.0);
  return out;
}

void adam_step(std::span<float> params, std::span<const double> grads, OptimizerState& state) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ContractError("adam_step: parameter, gradient and moment sizes differ");
  }
  const auto& h = state.hyper;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step_count));
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    if (m[i] == 0.0) continue;
    const double step = h.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + h.eps);
    params[i] = static_cast<float>(static_cast<double>(params[i]) - step);
  }
}

TrainLog::TrainLog(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open training log " + path.string());
  if (fresh) out_ << "iteration,loss,w_sigma,w_c,gamma_used,temperature\n";
  out_ << std::setprecision(10);
}

void TrainLog::append(std::int64_t iteration, double loss, double w_sigma, double w_c,
                      double gamma_used, double temperature) {
  if (!out_.is_open()) return;
  out_ << iteration << ',' << loss << ',' << w_sigma << ',' << w_c << ',' << gamma_used << ',';
  if (std::isfinite(temperature)) out_ << temperature;
  out_ << '\n';
}

RayTable::RayTable(const EditDataset& dataset, const RayOptions& opts) {
  dataset.validate();
  pixels_per_view_ = static_cast<std::size_t>(dataset.height()) *
                     static_cast<std::size_t>(dataset.width());
  rays_.reserve(pixels_per_view_ * dataset.size());
  for (const auto& v : dataset.views) {
    for (int r = 0; r < dataset.height(); ++r) {
      for (int c = 0; c < dataset.width(); ++c) rays_.push_back(generate_ray(v.pose, r, c, opts));
    }
  }
}

RayBatch sample_batch(const EditDataset& dataset, const RayTable& table, int batch_size,
                      std::span<const double> view_weights, Rng& rng, ImageSource source) {
  if (batch_size < 1) throw PreconditionError("batch size must be positive");
  if (view_weights.size() != dataset.size()) {
    throw ContractError("sample_batch: one weight per view required");
  }
  const int w = dataset.width();
  const std::size_t n_views = dataset.size();
  const std::size_t per_view = table.pixels_per_view();
  RayBatch batch;
  batch.rays.resize(static_cast<std::size_t>(batch_size));
  for (auto& tr : batch.rays) {
    const std::size_t view = static_cast<std::size_t>(rng.uniform() * n_views);
    const std::size_t pixel = static_cast<std::size_t>(rng.uniform() * per_view);
    const int row = static_cast<int>(pixel / static_cast<std::size_t>(w));
    const int col = static_cast<int>(pixel % static_cast<std::size_t>(w));
    const View& v = dataset.views[view];
    tr.ray = table.ray(view, pixel);
    tr.view = view;
    tr.target = (source == ImageSource::kOriginal ? v.original : v.current).rgb(row, col);
    tr.weight = view_weights[view];
  }
  return batch;
}

DualFieldModel train_static(const EditDataset& dataset, const TrainConfig& config,
                            TrainLog* log) {
  dataset.validate();
  if (config.iterations < 0) throw PreconditionError("iterations must be nonnegative");
  DualFieldModel model(config.resolution, config.density_init);
  model.blend.t = 0;
  if (config.iterations == 0) return model;

  const RayTable table(dataset, config.rays);
  OptimizerState optimizer(model.static_field.parameters().size(), config.adam);
  Rng batch_rng(hash_combine(config.seed, 0x5747u));
  const std::vector<double> uniform(dataset.size(), 1.0);
  BackwardOptions bopts;
  bopts.n_samples = config.n_samples;
  bopts.strategy = config.strategy;
  bopts.background = config.background;
  bopts.rays = config.rays;
  bopts.field = TrainedField::kStatic;
  bopts.deterministic = config.deterministic;
  bopts.threads = config.threads;
  for (int it = 0; it < config.iterations; ++it) {
    const RayBatch batch =
        sample_batch(dataset, table, config.batch_size, uniform, batch_rng, ImageSource::kOriginal);
    bopts.seed = hash_combine(config.seed, static_cast<std::uint64_t>(it) + 1);
    const BackwardResult result = backward(model, batch, bopts);
    adam_step(model.static_field.parameters(), result.grads.values, optimizer);
    if (log) log->append(it + 1, result.loss, 0.0, 0.0, 1.0,
                         std::numeric_limits<double>::quiet_NaN());
  }
  return model;
}

}  // namespace dualfield
