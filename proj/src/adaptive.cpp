#include "adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "rng.hpp"

namespace dfs {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Rar: return "rar";
    case Strategy::Gmm: return "gmm";
  }
  return "random";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "random") return Strategy::Random;
  if (s == "rar") return Strategy::Rar;
  if (s == "gmm") return Strategy::Gmm;
  fail(ErrorCode::InvalidArgument, "unknown sampling strategy: " + s);
}

std::vector<double> residuals_from_predictions(
    const std::vector<std::vector<double>>& preds,
    const std::vector<std::vector<double>>& labels) {
  require(preds.size() == labels.size(), ErrorCode::InvalidArgument,
          "residual shape mismatch");
  std::vector<double> r(preds.size(), 0.0);
  for (size_t i = 0; i < preds.size(); ++i) {
    require(preds[i].size() == labels[i].size() && !preds[i].empty(),
            ErrorCode::InvalidArgument, "residual term size mismatch");
    double s = 0.0;
    for (size_t j = 0; j < preds[i].size(); ++j) {
      const double d = preds[i][j] - labels[i][j];
      s += d * d;
    }
    r[i] = s / static_cast<double>(preds[i].size());
  }
  return r;
}

std::vector<double> compute_residuals(const OperatorModel& model,
                                      const ParamLayout& layout,
                                      const TrainingSet& set) {
  const int n = set.num_samples();
  const int m = set.num_times();
  std::vector<double> residuals(n, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    double total = 0.0;
    size_t count = 0;
    for (int t = 0; t < m; ++t) {
      Tape tape(model.params, {});
      const int out = forward_on_tape(
          tape, model.arch, layout, set.inputs[i],
          static_cast<double>(set.snapshot_steps[t]));
      const std::vector<double>& pred = tape.value(out);
      const std::span<const double> label = set.label(i, t);
      for (size_t j = 0; j < pred.size(); ++j) {
        const double d = pred[j] - label[j];
        total += d * d;
      }
      count += pred.size();
    }
    residuals[i] = total / static_cast<double>(count);
  }
  return residuals;
}

std::vector<int> rar_select(std::span<const double> residuals, int k) {
  require(k >= 1 && k <= static_cast<int>(residuals.size()),
          ErrorCode::InvalidArgument, "rar_select: bad K");
  std::vector<int> order(residuals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return residuals[a] > residuals[b];
  });
  order.resize(k);
  return order;
}

Eigen::MatrixXd log_perm_matrix(const std::vector<CellField>& perm_fields) {
  require(!perm_fields.empty(), ErrorCode::InvalidArgument, "empty pool");
  const int d = static_cast<int>(perm_fields[0].values.size());
  Eigen::MatrixXd x(perm_fields.size(), d);
  for (size_t i = 0; i < perm_fields.size(); ++i) {
    require(static_cast<int>(perm_fields[i].values.size()) == d,
            ErrorCode::InvalidArgument, "inconsistent field sizes");
    for (int j = 0; j < d; ++j) x(i, j) = std::log(perm_fields[i].values[j]);
  }
  return x;
}

Proposal propose_new_samples(const OperatorModel& model,
                             const ParamLayout& layout, const TrainingSet& set,
                             const std::vector<CellField>& perm_fields,
                             const PcaModel& pca, const SamplerConfig& cfg,
                             int count, std::uint64_t event_seed) {
  require(static_cast<int>(perm_fields.size()) == set.num_samples(),
          ErrorCode::InvalidArgument, "pool/set size mismatch");
  const int n = set.num_samples();

  const std::vector<double> residuals = compute_residuals(model, layout, set);

  const Eigen::MatrixXd logk = log_perm_matrix(perm_fields);
  Eigen::MatrixXd latents(n, pca.latent_dim());
  for (int i = 0; i < n; ++i)
    latents.row(i) = pca_encode(pca, logk.row(i).transpose()).transpose();

  // degenerate-residual guard: a perfect model still proposes from the
  // training distribution
  std::vector<double> weights = residuals;
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) weights.assign(n, 1.0);

  const std::vector<int> idx =
      systematic_resample(weights, n, mix_seed(event_seed, 1));
  Eigen::MatrixXd resampled(n, pca.latent_dim());
  for (int i = 0; i < n; ++i) resampled.row(i) = latents.row(idx[i]);

  const GmmSelection sel = select_gmm(resampled, cfg.h_candidates,
                                      mix_seed(event_seed, 2), cfg.paper_dof);
  const Eigen::MatrixXd draws =
      sample_gmm(sel.model, count, mix_seed(event_seed, 3));

  Proposal prop;
  prop.chosen_m = sel.chosen_m;
  prop.bic_trace = sel.bic_trace;
  const Grid& grid = perm_fields[0].grid;
  for (int i = 0; i < count; ++i) {
    const Eigen::VectorXd decoded =
        pca_decode(pca, draws.row(i).transpose());
    CellField k = make_cell_field(grid, 0.0, "m^2");
    for (int j = 0; j < grid.num_cells(); ++j)
      k.values[j] = std::exp(decoded(j));
    prop.fields.push_back(std::move(k));
  }
  return prop;
}

void append_sample(AdaptivePool& pool, const CellField& perm,
                   std::vector<double> raw_labels, const NormStats& stats,
                   Feature feature, double trans_viscosity) {
  TrainingSet& set = pool.set;
  const int plane = set.height * set.width;
  require(static_cast<int>(raw_labels.size()) ==
              set.num_times() * set.label_plane(),
          ErrorCode::InvalidArgument, "label size mismatch");
  std::vector<double> input =
      build_input_channels(perm, trans_viscosity, feature);
  normalize_input(input, stats, plane);
  for (int t = 0; t < set.num_times(); ++t)
    normalize_output(std::span<double>(raw_labels)
                         .subspan(static_cast<size_t>(t) * set.label_plane(),
                                  set.label_plane()),
                     stats, plane);
  pool.perm.push_back(perm);
  set.inputs.push_back(std::move(input));
  set.labels.push_back(std::move(raw_labels));
}

namespace {

// one sampling event; mutates the pool, returns the log entry
GrowthEvent run_event(OperatorModel& model, const ParamLayout& layout,
                      AdaptivePool& pool, const Labeler& labeler,
                      const FieldSampler& field_sampler,
                      AdaptivePool* rar_pool, const SamplerConfig& scfg,
                      Feature feature, double trans_viscosity, int step,
                      int event_index, AdaptiveResult& result) {
  GrowthEvent ev;
  ev.step = step;
  ev.strategy = to_string(scfg.strategy);
  ev.requested = scfg.per_event;
  const std::uint64_t event_seed =
      mix_seed(scfg.seed, 1000 + static_cast<std::uint64_t>(event_index));

  auto label_and_add = [&](const CellField& field) {
    const auto t0 = Clock::now();
    try {
      std::vector<double> labels = labeler(field);
      result.labeling_seconds += seconds_since(t0);
      append_sample(pool, field, std::move(labels), model.stats, feature,
                    trans_viscosity);
      ++ev.added;
    } catch (const std::exception& e) {
      result.labeling_seconds += seconds_since(t0);
      ev.warnings.push_back(std::string("labeling failed, sample skipped: ") +
                            e.what());
    }
  };

  if (scfg.strategy == Strategy::Random) {
    for (int i = 0; i < scfg.per_event; ++i)
      label_and_add(field_sampler(
          mix_seed(event_seed, static_cast<std::uint64_t>(i))));
  } else if (scfg.strategy == Strategy::Rar) {
    require(rar_pool != nullptr, ErrorCode::InvalidArgument,
            "rar strategy needs a labeled candidate pool");
    const auto t0 = Clock::now();
    if (rar_pool->size() == 0) {
      ev.warnings.push_back("rar pool exhausted, no samples added");
      result.sampling_seconds += seconds_since(t0);
    } else {
      const int k = std::min(scfg.per_event, rar_pool->size());
      const std::vector<double> residuals =
          compute_residuals(model, layout, rar_pool->set);
      std::vector<int> selected = rar_select(residuals, k);
      result.sampling_seconds += seconds_since(t0);
      // move selected candidates into the training pool; pre-labeled, so
      // no labeler call. Consumed without replacement across events.
      for (int idx : selected) {
        pool.perm.push_back(rar_pool->perm[idx]);
        pool.set.inputs.push_back(rar_pool->set.inputs[idx]);
        pool.set.labels.push_back(rar_pool->set.labels[idx]);
        ++ev.added;
      }
      std::sort(selected.begin(), selected.end(), std::greater<int>());
      for (int idx : selected) {
        rar_pool->perm.erase(rar_pool->perm.begin() + idx);
        rar_pool->set.inputs.erase(rar_pool->set.inputs.begin() + idx);
        rar_pool->set.labels.erase(rar_pool->set.labels.begin() + idx);
      }
    }
  } else {
    const auto t0 = Clock::now();
    try {
      const Eigen::MatrixXd logk = log_perm_matrix(pool.perm);
      const PcaModel pca = fit_pca(logk, scfg.pca_threshold);
      const Proposal prop =
          propose_new_samples(model, layout, pool.set, pool.perm, pca, scfg,
                              scfg.per_event, event_seed);
      ev.chosen_m = prop.chosen_m;
      result.sampling_seconds += seconds_since(t0);
      for (const CellField& field : prop.fields) label_and_add(field);
    } catch (const Error& e) {
      result.sampling_seconds += seconds_since(t0);
      ev.warnings.push_back(std::string("proposal failed, event skipped: ") +
                            e.what());
    }
  }
  ev.train_size = pool.size();
  return ev;
}

}  // namespace

AdaptiveResult adaptive_training_loop(OperatorModel& model, AdaptivePool& pool,
                                      const Labeler& labeler,
                                      const FieldSampler& field_sampler,
                                      AdaptivePool* rar_pool,
                                      const SamplerConfig& scfg,
                                      const TrainConfig& tcfg, Feature feature,
                                      double trans_viscosity) {
  validate(tcfg);
  require(pool.size() >= 2, ErrorCode::InvalidArgument,
          "initial labeled set must hold at least 2 samples");
  require(scfg.events == 0 || scfg.interval >= 1, ErrorCode::InvalidArgument,
          "sampling events need a positive interval");

  const ParamLayout layout = build_param_layout(model.arch);
  Rng rng(tcfg.seed);
  AdamState adam;
  std::vector<double> grad(model.params.size());
  AdaptiveResult result;
  result.loss_history.reserve(static_cast<size_t>(tcfg.epochs) *
                              tcfg.iterations);

  TrainingSet& data = pool.set;
  std::vector<BatchItem> batch(tcfg.batch_size);
  int events_done = 0;
  int step = 0;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    for (int iter = 0; iter < tcfg.iterations; ++iter) {
      for (int b = 0; b < tcfg.batch_size; ++b) {
        const int s = static_cast<int>(rng.below(data.num_samples()));
        const int ti = static_cast<int>(rng.below(data.num_times()));
        batch[b] = {data.inputs[s], data.snapshot_steps[ti],
                    data.label(s, ti)};
      }
      const double loss = gradients(model, layout, batch, grad);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::Numerical,
             "non-finite loss at step " + std::to_string(step + 1) + " (lr " +
                 std::to_string(tcfg.lr) + ")");
      }
      adam_step(model.params, grad, adam, tcfg.lr, tcfg.beta1, tcfg.beta2,
                tcfg.eps);
      result.loss_history.push_back(loss);
      ++step;

      if (scfg.events > 0 && events_done < scfg.events &&
          step % scfg.interval == 0) {
        result.growth.push_back(run_event(
            model, layout, pool, labeler, field_sampler, rar_pool, scfg,
            feature, trans_viscosity, step, events_done, result));
        ++events_done;
      }
    }
  }
  return result;
}

}  // namespace dfs
