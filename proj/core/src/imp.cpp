// Copyright 2026 The prunelaw Authors
// SPDX-License-Identifier: Apache-2.0

#include "prunelaw/imp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "prunelaw/errors.hpp"

namespace prunelaw {

namespace {

// Stream tags keep the RNG uses of one seed apart.
enum class Stream : std::uint32_t { Data = 1, Subsample = 2, Init = 3, Shuffle = 4 };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream s, std::uint32_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), extra};
  return std::mt19937_64(seq);
}

void relu_inplace(std::vector<double>& v) {
  for (auto& x : v) x = std::max(0.0, x);
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.assign(layer.b.begin(), layer.b.end());
  for (int o = 0; o < layer.out; ++o) {
    const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
    double acc = 0.0;
    for (int i = 0; i < layer.in; ++i) acc += row[i] * in[i];
    out[o] += acc;
  }
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

ToyDataset make_toy_dataset(std::size_t n_total, int input_dim, int n_classes, std::uint64_t rng_seed,
                            const ToyTaskOptions& options) {
  if (input_dim < 1) throw InvalidParameterError("toy dataset: input_dim must be >= 1");
  if (n_classes < 2) throw InvalidParameterError("toy dataset: n_classes must be >= 2");
  if (n_total < 10 * static_cast<std::size_t>(n_classes)) {
    throw InvalidParameterError("toy dataset: n_total must be at least 10 * n_classes");
  }
  if (options.clusters_per_class < 1) throw InvalidParameterError("toy dataset: clusters_per_class must be >= 1");
  if (!(options.separation > 0.0)) throw InvalidParameterError("toy dataset: separation must be > 0");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw InvalidParameterError("toy dataset: test_fraction must lie in (0, 1)");
  }

  auto rng = stream_rng(rng_seed, Stream::Data);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto dim = static_cast<std::size_t>(input_dim);
  const int n_clusters = n_classes * options.clusters_per_class;
  // Two centers with N(0, s^2) coordinates lie about s * sqrt(2 dim) apart.
  const double s = options.separation / std::sqrt(2.0 * static_cast<double>(dim));
  std::vector<double> centers(static_cast<std::size_t>(n_clusters) * dim);
  for (auto& c : centers) c = s * z(rng);

  std::vector<double> x(n_total * dim);
  std::vector<int> y(n_total);
  std::uniform_int_distribution<int> pick_cluster(0, options.clusters_per_class - 1);
  for (std::size_t i = 0; i < n_total; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(n_classes));
    const int cluster = label * options.clusters_per_class + pick_cluster(rng);
    y[i] = label;
    for (std::size_t k = 0; k < dim; ++k) x[i * dim + k] = centers[static_cast<std::size_t>(cluster) * dim + k] + z(rng);
  }
  std::vector<std::size_t> order(n_total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = std::max<std::size_t>(static_cast<std::size_t>(n_classes),
                                            static_cast<std::size_t>(options.test_fraction * static_cast<double>(n_total)));
  ToyDataset data;
  data.input_dim = input_dim;
  data.n_classes = n_classes;
  for (std::size_t r = 0; r < n_total; ++r) {
    const std::size_t i = order[r];
    auto& fx = r < n_test ? data.test_x : data.train_x;
    auto& fy = r < n_test ? data.test_y : data.train_y;
    fx.insert(fx.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim), x.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    fy.push_back(y[i]);
  }
  return data;
}

DatasetView subsample(const ToyDataset& data, std::size_t n, std::uint64_t rng_seed) {
  if (n < 1 || n > data.train_size()) {
    throw InvalidParameterError("subsample: n = " + std::to_string(n) + " outside [1, " +
                                std::to_string(data.train_size()) + "]");
  }
  std::vector<std::size_t> idx(data.train_size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n < idx.size()) {
    auto rng = stream_rng(rng_seed, Stream::Subsample);
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  return DatasetView{&data, std::move(idx)};
}

int ToyFamilySpec::hidden_width() const {
  return static_cast<int>(std::lround(base_width * width_scale));
}

void ToyFamilySpec::validate() const {
  if (depth < 2) throw InvalidParameterError("toy family: depth must be >= 2");
  if (!(width_scale > 0.0)) throw InvalidParameterError("toy family: width_scale must be > 0");
  if (base_width < 1) throw InvalidParameterError("toy family: base_width must be >= 1");
  if (hidden_width() < 1) throw InvalidParameterError("toy family: width_scale leaves no hidden units");
  if (input_dim < 1) throw InvalidParameterError("toy family: input_dim must be >= 1");
  if (n_classes < 2) throw InvalidParameterError("toy family: n_classes must be >= 2");
}

void TrainConfig::validate() const {
  if (total_epochs < 2) throw InvalidParameterError("train: total_epochs must be >= 2");
  if (!(rewind_epoch > 0 && rewind_epoch < total_epochs)) {
    throw InvalidParameterError("train: rewind_epoch must lie strictly between 0 and total_epochs");
  }
  if (!(learning_rate > 0.0)) throw InvalidParameterError("train: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidParameterError("train: momentum must lie in [0, 1)");
  if (batch_size < 1) throw InvalidParameterError("train: batch_size must be >= 1");
}

void ImpConfig::validate() const {
  if (!(prune_fraction > 0.0 && prune_fraction < 1.0)) throw InvalidParameterError("imp: prune_fraction must lie in (0, 1)");
  if (iterations < 1) throw InvalidParameterError("imp: iterations must be >= 1");
  if (subsample_size < 0) throw InvalidParameterError("imp: subsample_size must be >= 0");
}

Mlp Mlp::init(const ToyFamilySpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  auto rng = stream_rng(rng_seed, Stream::Init);
  std::normal_distribution<double> z(0.0, 1.0);
  Mlp net;
  int in = spec.input_dim;
  for (int k = 0; k < spec.depth; ++k) {
    const int out = k + 1 == spec.depth ? spec.n_classes : spec.hidden_width();
    DenseLayer layer{in, out, std::vector<double>(static_cast<std::size_t>(in) * out), std::vector<double>(out, 0.0)};
    const double scale = std::sqrt(2.0 / in);
    for (auto& w : layer.w) w = scale * z(rng);
    net.layers.push_back(std::move(layer));
    in = out;
  }
  return net;
}

Mask Mlp::full_mask() const {
  Mask m;
  for (const auto& l : layers) m.emplace_back(l.w.size(), std::uint8_t{1});
  return m;
}

std::size_t Mlp::prunable_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> a(x.begin(), x.end()), z;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    affine(layers[k], a, z);
    if (k + 1 < layers.size()) relu_inplace(z);
    a.swap(z);
  }
  return a;
}

std::size_t unmasked_count(const Mask& mask) noexcept {
  std::size_t n = 0;
  for (const auto& l : mask) n += static_cast<std::size_t>(std::count(l.begin(), l.end(), std::uint8_t{1}));
  return n;
}

double test_error(const Mlp& net, const ToyDataset& data) {
  const auto dim = static_cast<std::size_t>(data.input_dim);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.test_size(); ++i) {
    const auto logits = net.forward(std::span<const double>(data.test_x).subspan(i * dim, dim));
    if (static_cast<int>(argmax(logits)) != data.test_y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.test_size());
}

TrainResult train(Mlp& net, const Mask& mask, const DatasetView& view, const TrainConfig& cfg, int from_epoch,
                  int to_epoch, Mlp* checkpoint) {
  cfg.validate();
  if (view.data == nullptr || view.size() == 0) throw InvalidParameterError("train: empty dataset view");
  if (mask.size() != net.layers.size()) throw InvalidParameterError("train: mask has the wrong number of layers");
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k].size() != net.layers[k].w.size()) throw InvalidParameterError("train: mask shape mismatch");
  }
  if (from_epoch < 0 || to_epoch > cfg.total_epochs || from_epoch > to_epoch) {
    throw InvalidParameterError("train: epoch range outside [0, total_epochs]");
  }

  const ToyDataset& data = *view.data;
  const auto dim = static_cast<std::size_t>(data.input_dim);
  const std::size_t n_layers = net.layers.size();

  std::vector<std::vector<double>> vel_w(n_layers), vel_b(n_layers), grad_w(n_layers), grad_b(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    vel_w[k].assign(net.layers[k].w.size(), 0.0);
    vel_b[k].assign(net.layers[k].b.size(), 0.0);
  }
  std::vector<std::vector<double>> acts(n_layers + 1), pre(n_layers);
  std::vector<double> delta, next_delta;

  TrainResult result;
  for (int epoch = from_epoch; epoch < to_epoch; ++epoch) {
    const double lr = epoch < cfg.total_epochs / 2 ? cfg.learning_rate : cfg.learning_rate / 10.0;
    std::vector<std::size_t> order = view.indices;
    auto rng = stream_rng(cfg.rng_seed, Stream::Shuffle, static_cast<std::uint32_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = 0; k < n_layers; ++k) {
        grad_w[k].assign(net.layers[k].w.size(), 0.0);
        grad_b[k].assign(net.layers[k].b.size(), 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t ex = order[s];
        acts[0].assign(data.train_x.begin() + static_cast<std::ptrdiff_t>(ex * dim),
                       data.train_x.begin() + static_cast<std::ptrdiff_t>((ex + 1) * dim));
        for (std::size_t k = 0; k < n_layers; ++k) {
          affine(net.layers[k], acts[k], pre[k]);
          acts[k + 1] = pre[k];
          if (k + 1 < n_layers) relu_inplace(acts[k + 1]);
        }
        // Softmax cross-entropy, shifted by the max logit for stability.
        const auto& logits = acts[n_layers];
        const double mx = *std::max_element(logits.begin(), logits.end());
        double denom = 0.0;
        for (double v : logits) denom += std::exp(v - mx);
        const int label = data.train_y[ex];
        batch_loss += std::log(denom) - (logits[static_cast<std::size_t>(label)] - mx);
        delta.resize(logits.size());
        for (std::size_t c = 0; c < logits.size(); ++c) {
          delta[c] = std::exp(logits[c] - mx) / denom - (static_cast<int>(c) == label ? 1.0 : 0.0);
        }
        for (std::size_t k = n_layers; k-- > 0;) {
          const DenseLayer& layer = net.layers[k];
          const auto& a_in = acts[k];
          for (int o = 0; o < layer.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            grad_b[k][static_cast<std::size_t>(o)] += d;
            double* gw = grad_w[k].data() + static_cast<std::size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) gw[i] += d * a_in[static_cast<std::size_t>(i)];
          }
          if (k == 0) break;
          next_delta.assign(static_cast<std::size_t>(layer.in), 0.0);
          for (int o = 0; o < layer.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            const double* row = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
            for (int i = 0; i < layer.in; ++i) next_delta[static_cast<std::size_t>(i)] += row[i] * d;
          }
          for (std::size_t i = 0; i < next_delta.size(); ++i) {
            if (pre[k - 1][i] <= 0.0) next_delta[i] = 0.0;
          }
          delta.swap(next_delta);
        }
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
      }
      epoch_loss += batch_loss;
      for (std::size_t k = 0; k < n_layers; ++k) {
        auto& layer = net.layers[k];
        for (std::size_t j = 0; j < layer.w.size(); ++j) {
          if (!mask[k][j]) continue;
          vel_w[k][j] = cfg.momentum * vel_w[k][j] + grad_w[k][j] * inv;
          layer.w[j] -= lr * vel_w[k][j];
        }
        for (std::size_t j = 0; j < layer.b.size(); ++j) {
          vel_b[k][j] = cfg.momentum * vel_b[k][j] + grad_b[k][j] * inv;
          layer.b[j] -= lr * vel_b[k][j];
        }
      }
    }
    result.final_loss = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(result.final_loss)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": non-finite loss");
    }
    result.epoch_losses.push_back(result.final_loss);
    if (checkpoint != nullptr && epoch + 1 == cfg.rewind_epoch) *checkpoint = net;
  }
  return result;
}

Mask prune_global_magnitude(const Mlp& net, const Mask& mask, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidParameterError("prune: fraction must lie in (0, 1)");
  if (mask.size() != net.layers.size()) throw InvalidParameterError("prune: mask has the wrong number of layers");
  struct Slot {
    double magnitude;
    std::size_t order;
    std::size_t layer;
    std::size_t index;
  };
  std::vector<Slot> alive;
  std::size_t order = 0;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    if (mask[k].size() != net.layers[k].w.size()) throw InvalidParameterError("prune: mask shape mismatch");
    for (std::size_t j = 0; j < mask[k].size(); ++j, ++order) {
      if (mask[k][j]) alive.push_back({std::abs(net.layers[k].w[j]), order, k, j});
    }
  }
  const auto remove = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(alive.size())));
  if (remove == 0) {
    throw InvalidParameterError("prune: fraction " + format_double(fraction) + " of " + std::to_string(alive.size()) +
                                " surviving weights removes nothing");
  }
  if (remove >= alive.size()) throw InvalidParameterError("prune: no weights would remain");
  std::nth_element(alive.begin(), alive.begin() + static_cast<std::ptrdiff_t>(remove), alive.end(),
                   [](const Slot& a, const Slot& b) {
                     return a.magnitude != b.magnitude ? a.magnitude < b.magnitude : a.order < b.order;
                   });
  Mask out = mask;
  for (std::size_t i = 0; i < remove; ++i) out[alive[i].layer][alive[i].index] = 0;
  return out;
}

ImpRunResult imp_run(const ToyDataset& data, const ToyFamilySpec& family, const TrainConfig& train_cfg,
                     const ImpConfig& imp_cfg) {
  family.validate();
  train_cfg.validate();
  imp_cfg.validate();
  if (family.input_dim != data.input_dim || family.n_classes != data.n_classes) {
    throw InvalidParameterError("imp: family input_dim / n_classes do not match the dataset");
  }
  ImpRunResult run{family, train_cfg, imp_cfg, {}, false, {}};
  const std::size_t n =
      imp_cfg.subsample_size == 0 ? data.train_size() : static_cast<std::size_t>(imp_cfg.subsample_size);
  // One view for the whole chain.
  const DatasetView view = subsample(data, n, train_cfg.rng_seed);
  run.imp.subsample_size = static_cast<std::int64_t>(n);

  try {
    Mlp net = Mlp::init(family, train_cfg.rng_seed);
    Mask mask = net.full_mask();
    const std::size_t total = net.prunable_count();
    Mlp checkpoint;
    train(net, mask, view, train_cfg, 0, train_cfg.rewind_epoch, &checkpoint);

    for (int it = 0; it < imp_cfg.iterations; ++it) {
      const TrainResult tr = train(net, mask, view, train_cfg, train_cfg.rewind_epoch, train_cfg.total_epochs);
      const std::size_t alive = unmasked_count(mask);
      run.records.push_back({it, static_cast<double>(alive) / static_cast<double>(total), test_error(net, data),
                             tr.final_loss, alive, static_cast<std::int64_t>(train_cfg.rng_seed)});
      if (it + 1 == imp_cfg.iterations) break;
      mask = prune_global_magnitude(net, mask, imp_cfg.prune_fraction);
      net = checkpoint;
      for (std::size_t k = 0; k < net.layers.size(); ++k) {
        for (std::size_t j = 0; j < mask[k].size(); ++j) {
          if (!mask[k][j]) net.layers[k].w[j] = 0.0;
        }
      }
    }
  } catch (const Error& e) {
    run.failed = true;
    run.failure = e.what();
  }
  return run;
}

std::vector<MeasurementPoint> to_measurements(const ImpRunResult& run) {
  std::vector<MeasurementPoint> out;
  const auto n = run.imp.subsample_size;
  for (const auto& r : run.records) {
    NetworkConfig cfg{run.family.depth, run.family.width_scale, n, r.density};
    out.push_back({std::string(kToyFamily), cfg, r.test_error, r.seed});
  }
  return out;
}

RegionSummary summarize_regions(std::span<const CurvePoint> curve, double chance_error) {
  if (curve.size() < 12) throw InsufficientDataError("summarize_regions needs at least 12 points");
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (!(curve[i].density < curve[i - 1].density)) {
      throw InvalidParameterError("summarize_regions: densities must be strictly decreasing");
    }
  }
  RegionSummary s;
  const double e0 = curve[0].error;
  double low = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    s.plateau_max_rel_change = std::max(s.plateau_max_rel_change, std::abs(curve[i].error - e0) / e0);
    low += curve[i].error / 5.0;
  }
  s.low_plateau = s.plateau_max_rel_change < 0.10;

  const std::size_t n = curve.size();
  std::vector<double> tx, ty;
  for (std::size_t i = n - 4; i < n; ++i) {
    s.tail_mean_error += curve[i].error / 4.0;
    tx.push_back(std::log(curve[i].density));
    ty.push_back(std::log(curve[i].error));
  }

  const auto regress = [](const std::vector<double>& x, const std::vector<double>& y, double& slope, double& r2) {
    const double k = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
      syy += (y[i] - my) * (y[i] - my);
    }
    slope = sxx > 0.0 ? sxy / sxx : 0.0;
    r2 = sxx > 0.0 && syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  };
  double tail_r2 = 0.0;
  regress(tx, ty, s.tail_slope, tail_r2);

  std::vector<double> mx, my;
  if (s.tail_mean_error > low) {
    const double span = std::log(s.tail_mean_error / low);
    for (const auto& c : curve) {
      const double t = std::log(c.error / low) / span;
      if (t >= 0.2 && t <= 0.8) {
        mx.push_back(std::log(c.density));
        my.push_back(std::log(c.error));
      }
    }
  }
  s.power_law_points = mx.size();
  if (mx.size() >= 3) regress(mx, my, s.power_law_slope, s.power_law_r2);
  s.power_law = s.power_law_points >= 3 && s.power_law_r2 > 0.9 && s.power_law_slope < 0.0;
  s.high_plateau = s.tail_mean_error >= 0.7 * chance_error &&
                   std::abs(s.tail_slope) < 0.5 * std::abs(s.power_law_slope);
  return s;
}

}  // namespace prunelaw
