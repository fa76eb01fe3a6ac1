#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "test_support.hpp"

using namespace crbm;
using testing_support::binary_layer;
using testing_support::mixed_schema;
using testing_support::random_panel;
using testing_support::random_params;

namespace {

std::vector<EncodedShingle> random_binary_shingles(const LayerConfig& layer, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<EncodedShingle> out;
  const auto V = static_cast<Eigen::Index>(layer.visible());
  for (std::size_t i = 0; i < n; ++i) {
    EncodedShingle sh{Eigen::VectorXd(V), BoolVector::Constant(V, true), ShingleKind::complete, i, 0, i};
    for (Eigen::Index j = 0; j < V; ++j) sh.values[j] = rng.uniform() < 0.3 + 0.1 * static_cast<double>(j % 4) ? 1.0 : 0.0;
    out.push_back(sh);
  }
  return out;
}

double max_abs_diff(const CRBMParams& a, const CRBMParams& b) {
  double d = 0;
  d = std::max(d, (a.location - b.location).cwiseAbs().maxCoeff());
  d = std::max(d, (a.hidden_bias - b.hidden_bias).cwiseAbs().maxCoeff());
  d = std::max(d, (a.weights - b.weights).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST(Gradient, ExactMatchesFiniteDifferenceOfLogLikelihood) {
  auto layer = binary_layer(2, 1, 1, 3);
  auto p = random_params(layer, 21, 0.7);
  auto data = random_binary_shingles(layer, 12, 4);
  auto g = pl_gradient_exact(layer, p, data);
  auto loglik = [&](const CRBMParams& q) {
    auto t = exact_enumerate(layer, q);
    double s = 0;
    for (const auto& sh : data) s += std::log(t.visible_marginal(testing_support::pack_bits(sh.values)));
    return s / static_cast<double>(data.size());
  };
  const double h = 1e-5;
  auto check = [&](auto get) {
    for (Eigen::Index i = 0; i < get(p).size(); ++i) {
      CRBMParams up = p, dn = p;
      get(up).data()[i] += h;
      get(dn).data()[i] -= h;
      double fd = (loglik(up) - loglik(dn)) / (2 * h);
      EXPECT_NEAR(get(g).data()[i], fd, 1e-7);
    }
  };
  check([](CRBMParams& q) -> Eigen::VectorXd& { return q.location; });
  check([](CRBMParams& q) -> Eigen::VectorXd& { return q.hidden_bias; });
  check([](CRBMParams& q) -> Eigen::MatrixXd& { return q.weights; });
}

TEST(Gradient, GaussianStatisticsMatchFiniteDifferenceOfFreeEnergy) {
  auto layer = make_layer({continuous_variable("x", Role::longitudinal, GroupPattern::both, -9, 9),
                           binary_variable("b", Role::longitudinal, GroupPattern::both)},
                          1, 3, 3);
  auto p = random_params(layer, 6, 0.5);
  Eigen::VectorXd x(4);
  x << 0.7, 1.0, -1.2, 0.0;
  Eigen::MatrixXd X = x.transpose();
  auto g = mean_statistics(layer, p, X, hidden_probabilities(layer, p, X));
  const double h = 1e-6;
  auto fd = [&](auto get, Eigen::Index i) {
    CRBMParams up = p, dn = p;
    get(up)[i] += h;
    get(dn)[i] -= h;
    return -(free_energy(layer, up, x) - free_energy(layer, dn, x)) / (2 * h);
  };
  for (Eigen::Index j = 0; j < 4; ++j) {
    EXPECT_NEAR(g.location[j], fd([](CRBMParams& q) -> Eigen::VectorXd& { return q.location; }, j), 1e-6);
    if (layer.units[static_cast<std::size_t>(j)].kind == UnitKind::gaussian) {
      EXPECT_NEAR(g.log_scale[j], fd([](CRBMParams& q) -> Eigen::VectorXd& { return q.log_scale; }, j), 1e-6);
    }
  }
}

TEST(Gradient, PcdAverageApproachesExact) {
  auto layer = binary_layer(2, 1, 1, 3);
  auto p = random_params(layer, 2, 0.8);
  auto data = random_binary_shingles(layer, 64, 3);
  auto exact = pl_gradient_exact(layer, p, data);
  TrainConfig cfg;
  cfg.mc_steps = 200;
  cfg.weight_penalty = 0.0;
  auto chains = PersistentChains::init(layer, p, data, 500, 1);
  CRBMParams avg = CRBMParams::zeros(layer);
  const int steps = 100;
  for (int s = 0; s < steps; ++s) avg += pcd_step(layer, p, data, chains, cfg, static_cast<std::uint64_t>(s)).gradient;
  avg = (1.0 / steps) * avg;
  EXPECT_LT(max_abs_diff(avg, exact), 2e-2);
}

TEST(Gradient, BeamWithZeroWeightIsBitwisePseudoLikelihood) {
  auto layer = binary_layer(2, 1, 1, 3);
  auto p = random_params(layer, 2);
  auto data = random_binary_shingles(layer, 20, 3);
  TrainConfig cfg;
  auto chains = PersistentChains::init(layer, p, data, 20, 1);
  auto pcd = pcd_step(layer, p, data, chains, cfg);
  auto adv = adversary_gradient(layer, p, pcd.data_hidden, chains.batch.visible, pcd.model_hidden, 0.0);
  auto g = beam_gradient(pcd.gradient, adv.gradient, 0.0);
  auto a = g.flatten(), b = pcd.gradient.flatten();
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())), 0);
  auto adv2 = adversary_gradient(layer, p, pcd.data_hidden, chains.batch.visible, pcd.model_hidden, 0.3);
  EXPECT_FALSE(beam_gradient(pcd.gradient, adv2.gradient, 0.3) == pcd.gradient);
}

TEST(Optimizer, NonFiniteGradientThrows) {
  auto layer = binary_layer(2, 0, 1, 2);
  auto p = random_params(layer, 1);
  auto opt = OptimizerState::for_params(p);
  CRBMParams g = CRBMParams::zeros(layer);
  g.weights(0, 1) = std::nan("");
  EXPECT_THROW(adam_update(opt, p, g, 0.01), NumericError);
  g.weights(0, 1) = 1.0;
  auto before = p.weights(0, 1);
  adam_update(opt, p, g, 0.01);
  EXPECT_NEAR(p.weights(0, 1) - before, 0.01, 1e-9);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  TrainConfig c;
  c.batch_size = 400;
  c.learning_rate = 0.016;
  c.adversary_weight = 0.3;
  c.hidden_units = 65;
  c.seed = 12;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  EXPECT_THROW(train_config_from_json({{"batchsize", 10}}), ContractError);
  EXPECT_THROW(train_config_from_json({{"adversary_weight", 1.0}}), ContractError);
  EXPECT_THROW(train_config_from_json({{"learning_rate", -1.0}}), ContractError);
}

TEST(Config, ImputerDefaults) {
  auto c = imputer_config(5);
  EXPECT_EQ(c.batch_size, 500);
  EXPECT_EQ(c.epochs, 1000);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.02);
  EXPECT_DOUBLE_EQ(c.beta_std, 0.15);
  EXPECT_DOUBLE_EQ(c.adversary_weight, 0.30);
  EXPECT_EQ(c.hidden_units, 32);
}

TEST(Training, DeterministicAndInputUntouched) {
  auto ds = random_panel(mixed_schema(), 30, 5, 4);
  auto copy = ds;
  auto enc = encode(ds, ds);
  auto layer = make_layer(mixed_schema(), 1, 3, 4);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.hidden_units = 4;
  cfg.mc_steps = 3;
  cfg.adversary_weight = 0.15;
  cfg.seed = 9;
  auto a = train_crbm(enc, layer, cfg);
  auto b = train_crbm(enc, layer, cfg);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_EQ(a.log.size(), 3u);
  cfg.seed = 10;
  EXPECT_FALSE(train_crbm(enc, layer, cfg).params == a.params);
  for (std::size_t s = 0; s < ds.size(); ++s) EXPECT_EQ(ds.subjects[s], copy.subjects[s]);
  EXPECT_GE(a.params.log_scale.minCoeff(), std::log(kMinScale) - 1e-15);
}

TEST(Training, HiddenCountMustMatchLayer) {
  auto ds = random_panel(mixed_schema(), 10, 3, 4);
  auto enc = encode(ds, ds);
  TrainConfig cfg;
  cfg.hidden_units = 5;
  EXPECT_THROW(train_crbm(enc, make_layer(mixed_schema(), 1, 3, 4), cfg), ContractError);
}

TEST(Training, LikelihoodImprovesOnTinyModel) {
  auto layer = binary_layer(2, 1, 1, 3);
  auto data = random_binary_shingles(layer, 200, 7);
  Rng noise(8);
  for (auto& sh : data)  // correlated pairs give the model something to learn
    for (Eigen::Index j : {1, 3})
      if (noise.uniform() < 0.9) sh.values[j] = sh.values[j - 1];
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 50;
  cfg.hidden_units = 3;
  cfg.learning_rate = 0.05;
  cfg.mc_steps = 5;
  cfg.weight_penalty = 0;
  auto loglik = [&](const CRBMParams& q) {
    auto t = exact_enumerate(layer, q);
    double s = 0;
    for (const auto& sh : data) s += std::log(t.visible_marginal(testing_support::pack_bits(sh.values)));
    return s / static_cast<double>(data.size());
  };
  auto res = train_on_shingles(layer, data, cfg);
  TrainConfig zero = cfg;
  zero.epochs = 0;
  auto init = train_on_shingles(layer, data, zero);
  EXPECT_GT(loglik(res.params), loglik(init.params));
}

TEST(Imputation, TypeTwoMiddleVisitIsFilledOthersKept) {
  Schema s{continuous_variable("x", Role::longitudinal, GroupPattern::three_month, -100, 100),
           continuous_variable("y", Role::longitudinal, GroupPattern::both, -100, 100),
           binary_variable("g", Role::background, GroupPattern::both)};
  auto ds = random_panel(s, 40, 5, 2, 0.0);
  for (auto& r : ds.subjects)
    for (auto& row : r.visits)
      for (std::size_t v = 0; v < 2; ++v)
        if (!row[v]) row[v] = 1.0;
  auto enc = encode(ds, ds);
  TrainConfig cfg = imputer_config(3);
  cfg.epochs = 5;
  cfg.batch_size = 50;
  auto imp = train_imputer(enc, cfg);
  EXPECT_EQ(imp.layer.lag, 1);
  Shingle sh;
  sh.kind = ShingleKind::type_two;
  sh.background = {Cell(1.0)};
  sh.windows = {{Cell(10.0), Cell(20.0)}, {std::nullopt, std::nullopt}, {Cell(12.0), Cell(22.0)}};
  auto out = impute_type_II(imp, sh, 5);
  EXPECT_EQ(out.kind, ShingleKind::complete);
  EXPECT_EQ(out.windows[0], sh.windows[0]);
  EXPECT_EQ(out.windows[2], sh.windows[2]);
  EXPECT_TRUE(out.windows[1][0] && out.windows[1][1]);
  EXPECT_EQ(impute_type_II(imp, sh, 5).windows[1], out.windows[1]);
  Shingle complete = sh;
  complete.kind = ShingleKind::complete;
  EXPECT_THROW(impute_type_II(imp, complete, 5), ContractError);
}

TEST(Imputation, TrainingShinglesDropTypeOne) {
  Schema s{continuous_variable("x", Role::longitudinal, GroupPattern::three_month, -100, 100)};
  PanelDataset ds{s, {}, 3, 5};
  for (int i = 0; i < 6; ++i) {
    SubjectRecord r{"s" + std::to_string(i), "a", std::vector<std::vector<Cell>>(5, std::vector<Cell>(1))};
    r.visits[0][0] = i;
    r.visits[2][0] = i + 1.0;
    r.visits[4][0] = i + 2.0;  // windows: (0,1,2) II, (1,2,3) I, (2,3,4) II
    ds.subjects.push_back(r);
  }
  auto enc = encode(ds, ds);
  auto layer = make_layer(s, 2, 3, 2);
  TrainConfig cfg;
  cfg.hidden_units = 2;
  auto sh = training_shingles(enc, layer, cfg);
  EXPECT_EQ(sh.size(), 12u);
  for (const auto& x : sh) EXPECT_EQ(x.kind, ShingleKind::type_two);
}
