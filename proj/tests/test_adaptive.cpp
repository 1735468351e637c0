#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adaptive.hpp"
#include "experiment.hpp"
#include "rng.hpp"

using namespace dfs;

namespace {

// tiny single-phase problem shared by the loop tests
struct TinyProblem {
  GenerationConfig gen;
  OperatorArch arch;
  GaussianFieldSampler* sampler = nullptr;
  Labeler labeler;
  NormStats stats;
  double mu = 1e-3;

  TinyProblem() {
    gen = default_generation_config(Phase::Single, 2);
    gen.grid = build_grid(8, 8, 1, 10, 10, 10);
    // smooth fields keep the latent space small relative to the pool sizes
    // these tests use
    gen.covariance.model = CovarianceModel::Gaussian;
    gen.covariance.lx = gen.covariance.ly = 40.0;
    gen.covariance.lz = 10.0;
    gen.single.num_steps = 10;
    gen.snapshot_stride = 5;  // two snapshots
    gen.wells = {{gen.grid.cell_id(0, 0, 0), 2e7, 1e-12, WellKind::Producer},
                 {gen.grid.cell_id(7, 7, 0), 2e7, 1e-12, WellKind::Producer}};
    mu = gen.single.viscosity;

    arch.kind = "aronet";
    arch.in_channels = input_channel_count(gen.grid, Feature::Trans);
    arch.out_channels = 1;
    arch.height = arch.width = 8;
    arch.base_width = 8;
    arch.levels = 2;
    arch.q = 4;
    arch.trunk_dim = 16;
    arch.trunk_hidden = 16;

    sampler = new GaussianFieldSampler(gen.grid, gen.covariance);
    labeler = make_fvm_labeler(gen);
  }
  ~TinyProblem() { delete sampler; }

  AdaptivePool make_pool(int n, std::uint64_t seed_base) {
    std::vector<CellField> fields;
    std::vector<std::vector<double>> raw_inputs, raw_labels;
    for (int i = 0; i < n; ++i) {
      fields.push_back(sampler->sample_permeability(seed_base + i));
      raw_inputs.push_back(
          build_input_channels(fields.back(), mu, Feature::Trans));
      raw_labels.push_back(labeler(fields.back()));
    }
    stats = compute_norm_stats(raw_inputs, raw_labels, arch.in_channels,
                               arch.out_channels, 64);
    AdaptivePool pool;
    pool.set.in_channels = arch.in_channels;
    pool.set.out_channels = arch.out_channels;
    pool.set.height = pool.set.width = 8;
    pool.set.snapshot_steps = gen.snapshot_steps();
    for (int i = 0; i < n; ++i)
      append_sample(pool, fields[i], labeler(fields[i]), stats,
                    Feature::Trans, mu);
    return pool;
  }
};

}  // namespace

TEST_CASE("per-sample residuals from predictions") {
  // single sample, single cell, single time, error 0.5 -> 0.25
  CHECK(residuals_from_predictions({{1.0}}, {{0.5}})[0] ==
        doctest::Approx(0.25));
  // invariant to sample ordering
  const std::vector<std::vector<double>> p{{1.0, 2.0}, {0.0}};
  const std::vector<std::vector<double>> l{{0.0, 2.0}, {1.0}};
  const auto r = residuals_from_predictions(p, l);
  const auto r_swapped =
      residuals_from_predictions({p[1], p[0]}, {l[1], l[0]});
  CHECK(r[0] == r_swapped[1]);
  CHECK(r[1] == r_swapped[0]);
}

TEST_CASE("perfect model has zero residuals") {
  TinyProblem tp;
  AdaptivePool pool = tp.make_pool(3, 100);
  OperatorModel model = make_operator_model(tp.arch, 1);
  model.stats = tp.stats;
  const ParamLayout lay = build_param_layout(tp.arch);
  // overwrite labels with the model's own predictions
  for (int i = 0; i < pool.size(); ++i) {
    std::vector<double> labels;
    for (int t = 0; t < pool.set.num_times(); ++t) {
      const auto pred = forward(model, pool.set.inputs[i],
                                pool.set.snapshot_steps[t]);
      labels.insert(labels.end(), pred.begin(), pred.end());
    }
    pool.set.labels[i] = labels;
  }
  for (double r : compute_residuals(model, lay, pool.set))
    CHECK(r == doctest::Approx(0.0));
}

TEST_CASE("rar_select picks the largest residuals") {
  CHECK(rar_select(std::vector<double>{3.0, 1.0, 2.0}, 2) ==
        std::vector<int>{0, 2});
  CHECK(rar_select(std::vector<double>{1.0, 1.0, 1.0}, 2) ==
        std::vector<int>{0, 1});  // ties toward the lower index
  const std::vector<double> all{0.5, 0.9, 0.1};
  CHECK(rar_select(all, 3).size() == 3);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(20);
    for (double& v : r) v = rng.uniform();
    const int k = 1 + static_cast<int>(rng.below(20));
    const std::vector<int> picked = rar_select(r, k);
    // brute-force oracle: sort a copy
    std::vector<double> sorted = r;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    const double cutoff = sorted[k - 1];
    for (int idx : picked) CHECK(r[idx] >= cutoff);
    CHECK(static_cast<int>(picked.size()) == k);
  }
}

TEST_CASE("uniform residuals propose near the training distribution") {
  TinyProblem tp;
  AdaptivePool pool = tp.make_pool(200, 500);
  OperatorModel model = make_operator_model(tp.arch, 2);
  model.stats = tp.stats;
  const ParamLayout lay = build_param_layout(tp.arch);
  // labels := predictions so residuals vanish and resampling falls back to
  // the unweighted bootstrap
  for (int i = 0; i < pool.size(); ++i) {
    std::vector<double> labels;
    for (int t = 0; t < pool.set.num_times(); ++t) {
      const auto pred = forward(model, pool.set.inputs[i],
                                pool.set.snapshot_steps[t]);
      labels.insert(labels.end(), pred.begin(), pred.end());
    }
    pool.set.labels[i] = labels;
  }

  const Eigen::MatrixXd logk = log_perm_matrix(pool.perm);
  const PcaModel pca = fit_pca(logk, 0.95);
  SamplerConfig cfg;
  cfg.h_candidates = {1, 2, 3};

  // direct GMM on the training latents for comparison
  Eigen::MatrixXd latents(pool.size(), pca.latent_dim());
  for (int i = 0; i < pool.size(); ++i)
    latents.row(i) =
        pca_encode(pca, logk.row(i).transpose()).transpose();
  const GmmSelection direct =
      select_gmm(latents, cfg.h_candidates, 777);

  std::vector<double> kls;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Proposal prop = propose_new_samples(model, lay, pool.set,
                                              pool.perm, pca, cfg, 4, seed);
    CHECK(static_cast<int>(prop.fields.size()) == 4);
    // KL(pipeline || direct) by Monte Carlo from the pipeline mixture
    const GmmSelection pipe = select_gmm(latents, cfg.h_candidates,
                                         seed * 131 + 9);
    const Eigen::MatrixXd draws = sample_gmm(pipe.model, 2000, seed + 5);
    double kl = 0.0;
    for (int i = 0; i < draws.rows(); ++i) {
      const Eigen::VectorXd z = draws.row(i).transpose();
      kl += gmm_log_density(pipe.model, z) - gmm_log_density(direct.model, z);
    }
    kls.push_back(kl / draws.rows());
  }
  std::sort(kls.begin(), kls.end());
  CHECK(kls[kls.size() / 2] < 0.5);
}

TEST_CASE("concentrated residuals pull proposals toward the hot sample") {
  TinyProblem tp;
  AdaptivePool pool = tp.make_pool(40, 900);
  OperatorModel model = make_operator_model(tp.arch, 4);
  model.stats = tp.stats;
  const ParamLayout lay = build_param_layout(tp.arch);
  const int hot = 13;
  for (int i = 0; i < pool.size(); ++i) {
    std::vector<double> labels;
    for (int t = 0; t < pool.set.num_times(); ++t) {
      auto pred = forward(model, pool.set.inputs[i],
                          pool.set.snapshot_steps[t]);
      // tiny residual everywhere, huge on the hot sample
      for (double& v : pred) v += (i == hot ? 1.0 : 1e-3);
      labels.insert(labels.end(), pred.begin(), pred.end());
    }
    pool.set.labels[i] = labels;
  }

  const Eigen::MatrixXd logk = log_perm_matrix(pool.perm);
  const PcaModel pca = fit_pca(logk, 0.95);
  const Eigen::VectorXd hot_code =
      pca_encode(pca, logk.row(hot).transpose());

  SamplerConfig cfg;
  cfg.h_candidates = {1, 2, 3};
  const Proposal prop =
      propose_new_samples(model, lay, pool.set, pool.perm, pca, cfg, 50, 3);

  // decoded fields must be strictly positive
  for (const CellField& f : prop.fields)
    for (double v : f.values) CHECK(v > 0.0);

  int near = 0;
  for (const CellField& f : prop.fields) {
    Eigen::VectorXd lk(f.values.size());
    for (size_t j = 0; j < f.values.size(); ++j)
      lk(j) = std::log(f.values[j]);
    const Eigen::VectorXd z = pca_encode(pca, lk);
    near += (z - hot_code).norm() <= 2.0 ? 1 : 0;
  }
  // scale check: 2.0 in latent units is small against the training spread
  double spread = 0.0;
  Eigen::MatrixXd latents(pool.size(), pca.latent_dim());
  for (int i = 0; i < pool.size(); ++i) {
    latents.row(i) = pca_encode(pca, logk.row(i).transpose()).transpose();
    spread = std::max(spread, (latents.row(i).transpose() - hot_code).norm());
  }
  CHECK(spread > 4.0);
  CHECK(near >= 40);  // >= 80% of 50
}

TEST_CASE("zero sampling events reproduce plain training bitwise") {
  TinyProblem tp;
  AdaptivePool pool = tp.make_pool(5, 300);
  TrainConfig tcfg;
  tcfg.epochs = 2;
  tcfg.iterations = 6;
  tcfg.batch_size = 2;
  tcfg.seed = 9;

  OperatorModel m1 = make_operator_model(tp.arch, 5);
  m1.stats = tp.stats;
  OperatorModel m2 = m1;

  SamplerConfig scfg;
  scfg.events = 0;
  const AdaptiveResult ar = adaptive_training_loop(
      m1, pool, tp.labeler,
      [&](std::uint64_t s) { return tp.sampler->sample_permeability(s); },
      nullptr, scfg, tcfg, Feature::Trans, tp.mu);

  AdaptivePool pool2 = tp.make_pool(5, 300);
  const TrainResult tr = train(m2, pool2.set, tcfg);
  CHECK(ar.loss_history == tr.loss_history);
  CHECK(m1.params == m2.params);
  CHECK(ar.growth.empty());
}

TEST_CASE("growth arithmetic and reproducibility of the adaptive loop") {
  TinyProblem tp;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.iterations = 12;
  tcfg.batch_size = 2;
  tcfg.seed = 21;

  SamplerConfig scfg;
  scfg.strategy = Strategy::Random;
  scfg.events = 5;
  scfg.per_event = 4;
  scfg.interval = 2;
  scfg.seed = 21;

  auto run = [&]() {
    AdaptivePool pool = tp.make_pool(10, 700);
    OperatorModel model = make_operator_model(tp.arch, 6);
    model.stats = tp.stats;
    const AdaptiveResult r = adaptive_training_loop(
        model, pool, tp.labeler,
        [&](std::uint64_t s) { return tp.sampler->sample_permeability(s); },
        nullptr, scfg, tcfg, Feature::Trans, tp.mu);
    return std::make_tuple(pool.size(), r, model.params);
  };

  auto [size1, r1, params1] = run();
  CHECK(size1 == 30);  // 10 + 5 * 4
  REQUIRE(r1.growth.size() == 5);
  CHECK(r1.growth[0].step == 2);
  CHECK(r1.growth[4].step == 10);
  for (const GrowthEvent& ev : r1.growth) {
    CHECK(ev.added == 4);
    CHECK(ev.warnings.empty());
  }
  CHECK(r1.growth[4].train_size == 30);

  auto [size2, r2, params2] = run();
  CHECK(size1 == size2);
  CHECK(r1.loss_history == r2.loss_history);
  CHECK(params1 == params2);
  for (size_t i = 0; i < r1.growth.size(); ++i)
    CHECK(r1.growth[i].train_size == r2.growth[i].train_size);
}

TEST_CASE("labeler failures skip samples with warnings, never abort") {
  TinyProblem tp;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.iterations = 4;
  tcfg.batch_size = 2;
  tcfg.seed = 2;

  SamplerConfig scfg;
  scfg.strategy = Strategy::Random;
  scfg.events = 2;
  scfg.per_event = 3;
  scfg.interval = 2;

  AdaptivePool pool = tp.make_pool(4, 1100);
  OperatorModel model = make_operator_model(tp.arch, 7);
  model.stats = tp.stats;
  const Labeler failing = [](const CellField&) -> std::vector<double> {
    fail(ErrorCode::Numerical, "synthetic labeler failure");
  };
  const AdaptiveResult r = adaptive_training_loop(
      model, pool, failing,
      [&](std::uint64_t s) { return tp.sampler->sample_permeability(s); },
      nullptr, scfg, tcfg, Feature::Trans, tp.mu);
  CHECK(pool.size() == 4);  // nothing added
  REQUIRE(r.growth.size() == 2);
  for (const GrowthEvent& ev : r.growth) {
    CHECK(ev.added == 0);
    CHECK(ev.warnings.size() == 3);
  }
  CHECK(r.loss_history.size() == 4);  // training finished anyway
}

TEST_CASE("rar strategy consumes the candidate pool without replacement") {
  TinyProblem tp;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.iterations = 4;
  tcfg.batch_size = 2;
  tcfg.seed = 4;

  SamplerConfig scfg;
  scfg.strategy = Strategy::Rar;
  scfg.events = 2;
  scfg.per_event = 3;
  scfg.interval = 2;

  AdaptivePool pool = tp.make_pool(6, 1300);
  AdaptivePool rar_pool = tp.make_pool(10, 1400);
  OperatorModel model = make_operator_model(tp.arch, 8);
  model.stats = tp.stats;
  const AdaptiveResult r = adaptive_training_loop(
      model, pool, tp.labeler,
      [&](std::uint64_t s) { return tp.sampler->sample_permeability(s); },
      &rar_pool, scfg, tcfg, Feature::Trans, tp.mu);
  CHECK(pool.size() == 12);      // 6 + 2*3
  CHECK(rar_pool.size() == 4);   // 10 - 2*3
  REQUIRE(r.growth.size() == 2);

  // selected candidates must be distinct across events: all inputs in the
  // grown pool are unique
  for (int i = 0; i < pool.size(); ++i)
    for (int j = i + 1; j < pool.size(); ++j)
      CHECK(pool.set.inputs[i] != pool.set.inputs[j]);
}

TEST_CASE("gmm strategy smoke test with growth accounting") {
  TinyProblem tp;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.iterations = 3;
  tcfg.batch_size = 2;
  tcfg.seed = 6;

  SamplerConfig scfg;
  scfg.strategy = Strategy::Gmm;
  scfg.events = 1;
  scfg.per_event = 3;
  scfg.interval = 2;
  scfg.h_candidates = {1, 2};
  scfg.seed = 6;

  AdaptivePool pool = tp.make_pool(12, 1500);
  OperatorModel model = make_operator_model(tp.arch, 9);
  model.stats = tp.stats;
  const AdaptiveResult r = adaptive_training_loop(
      model, pool, tp.labeler,
      [&](std::uint64_t s) { return tp.sampler->sample_permeability(s); },
      nullptr, scfg, tcfg, Feature::Trans, tp.mu);
  CHECK(pool.size() == 15);
  REQUIRE(r.growth.size() == 1);
  CHECK(r.growth[0].added == 3);
  CHECK(r.growth[0].chosen_m >= 1);
  // decoded permeability stays positive
  for (int i = 12; i < pool.size(); ++i)
    for (double v : pool.perm[i].values) CHECK(v > 0.0);
}
