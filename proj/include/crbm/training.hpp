#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "crbm/crbm_core.hpp"
#include "crbm/encoding.hpp"
#include "crbm/errors.hpp"
#include "crbm/model_io.hpp"
#include "crbm/panel.hpp"
#include "crbm/random.hpp"
#include "crbm/stats.hpp"

namespace crbm {

struct TrainConfig {
  int batch_size = 100;
  int epochs = 100;
  double learning_rate = 0.01;
  double beta_std = 0.15;
  double weight_penalty = 0.001;
  int mc_steps = 25;
  double adversary_weight = 0.0;
  int hidden_units = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ContractError("batch_size must be at least 1");
    if (epochs < 0) throw ContractError("epochs must be non-negative");
    if (!(learning_rate > 0)) throw ContractError("learning_rate must be positive");
    if (!(beta_std >= 0)) throw ContractError("beta_std must be non-negative");
    if (!(weight_penalty >= 0)) throw ContractError("weight_penalty must be non-negative");
    if (mc_steps < 1) throw ContractError("mc_steps must be at least 1");
    if (!(adversary_weight >= 0 && adversary_weight < 1)) throw ContractError("adversary weight must lie in [0, 1)");
    if (hidden_units < 1) throw ContractError("hidden_units must be at least 1");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},         {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},   {"beta_std", c.beta_std},
          {"weight_penalty", c.weight_penalty}, {"mc_steps", c.mc_steps},
          {"adversary_weight", c.adversary_weight}, {"hidden_units", c.hidden_units},
          {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "batch_size") c.batch_size = it->get<int>();
    else if (k == "epochs") c.epochs = it->get<int>();
    else if (k == "learning_rate") c.learning_rate = it->get<double>();
    else if (k == "beta_std") c.beta_std = it->get<double>();
    else if (k == "weight_penalty") c.weight_penalty = it->get<double>();
    else if (k == "mc_steps") c.mc_steps = it->get<int>();
    else if (k == "adversary_weight") c.adversary_weight = it->get<double>();
    else if (k == "hidden_units") c.hidden_units = it->get<int>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else throw ContractError("unknown training option '" + k + "'");
  }
  c.validate();
  return c;
}

/// The imputer's fixed hyperparameters.
inline TrainConfig imputer_config(std::uint64_t seed = 0) {
  return {500, 1000, 0.02, 0.15, 0.001, 25, 0.30, 32, seed};
}

// ---- encoded shingles -----------------------------------------------------

using BoolVector = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

/// A shingle laid out as one visible vector of a layer.
struct EncodedShingle {
  Eigen::VectorXd values;
  BoolVector observed;
  ShingleKind kind = ShingleKind::complete;
  std::size_t subject = 0;
  int start = 0;
  std::size_t id = 0;

  bool fully_observed() const { return observed.all(); }
};

/// Where each layer variable lives in the encoded dataset.
struct VariableMap {
  std::vector<std::size_t> source;  // index into the dataset schema, per layer variable

  VariableMap(const LayerConfig& layer, const Schema& schema) {
    for (const auto& v : layer.variables) {
      auto k = find_variable(schema, v.name);
      if (!k) throw ContractError("dataset has no variable '" + v.name + "' required by the model");
      if (!(schema[*k] == v)) throw ContractError("variable '" + v.name + "' differs between model and dataset");
      source.push_back(*k);
    }
  }
};

inline std::vector<EncodedShingle> encoded_shingles(const EncodedDataset& enc, const LayerConfig& layer) {
  VariableMap map(layer, enc.schema);
  CadenceView view(enc.cadence_months, layer.cadence_months, enc.visit_count);
  auto longi = layer.longitudinal_variables();
  auto back = layer.background_variables();
  const auto V = static_cast<Eigen::Index>(layer.visible());
  std::vector<EncodedShingle> out;
  for (std::size_t s = 0; s < enc.subjects.size(); ++s) {
    const auto& es = enc.subjects[s];
    auto slot_has_data = [&](int k) {
      auto t = view.data_slot(k);
      if (!t) return false;
      for (auto v : longi) {
        auto off = static_cast<Eigen::Index>(enc.layout.offset[map.source[v]]);
        if (es.observed(*t, off)) return true;
      }
      return false;
    };
    int span = 0;
    for (int k = 0; k < view.model_visits(); ++k)
      if (slot_has_data(k)) span = k + 1;
    for (int start = 0; start + layer.lag < span; ++start) {
      EncodedShingle sh{Eigen::VectorXd::Zero(V), BoolVector::Constant(V, false), ShingleKind::complete, s, start,
                        out.size()};
      auto copy = [&](std::size_t v, Eigen::Index t, std::size_t cell) {
        auto off = static_cast<Eigen::Index>(enc.layout.offset[map.source[v]]);
        for (std::size_t u = 0; u < unit_width(layer.variables[v]); ++u) {
          auto c = static_cast<Eigen::Index>(cell + u);
          auto su = off + static_cast<Eigen::Index>(u);
          sh.observed[c] = es.observed(t, su);
          if (sh.observed[c]) sh.values[c] = es.values(t, su);
        }
      };
      std::vector<bool> slot_missing;
      for (int i = 0; i <= layer.lag; ++i) {
        slot_missing.push_back(!slot_has_data(start + i));
        if (auto t = view.data_slot(start + i))
          for (auto v : longi) copy(v, *t, layer.cell(v, i));
      }
      for (auto v : back) copy(v, 0, layer.cell(v, 0));
      sh.kind = layer.lag == 2 ? classify_shingle(slot_missing) : ShingleKind::complete;
      out.push_back(std::move(sh));
    }
  }
  return out;
}

// ---- sufficient statistics ------------------------------------------------

/// Σ_i w_i (-∂F(x_i)/∂θ) with hidden expectations taken from H.
inline CRBMParams weighted_statistics(const LayerConfig& layer, const CRBMParams& p, const Eigen::MatrixXd& X,
                                      const Eigen::MatrixXd& H, const Eigen::VectorXd& w) {
  CRBMParams g = CRBMParams::zeros(layer);
  Eigen::VectorXd iv = inverse_variance(layer, p);
  Eigen::MatrixXd Xs = X.array().rowwise() * iv.transpose().array();
  g.weights = Xs.transpose() * (H.array().colwise() * w.array()).matrix();
  g.hidden_bias = H.transpose() * w;
  Eigen::MatrixXd WH = H * p.weights.transpose();  // N x V
  for (std::size_t j = 0; j < layer.visible(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    if (layer.units[j].kind == UnitKind::gaussian) {
      Eigen::ArrayXd d = X.col(jj).array() - p.location[jj];
      g.location[jj] = (w.array() * d).sum() * iv[jj];
      g.log_scale[jj] =
          (w.array() * (d.square() * iv[jj] - 2.0 * X.col(jj).array() * iv[jj] * WH.col(jj).array())).sum();
    } else {
      g.location[jj] = w.dot(X.col(jj));
    }
  }
  return g;
}

inline CRBMParams mean_statistics(const LayerConfig& layer, const CRBMParams& p, const Eigen::MatrixXd& X,
                                  const Eigen::MatrixXd& H) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(X.rows(), 1.0 / static_cast<double>(X.rows()));
  return weighted_statistics(layer, p, X, H, w);
}

/// Exact log-likelihood gradient of fully observed shingles on an
/// enumerable model: data statistics minus model expectations.
inline CRBMParams pl_gradient_exact(const LayerConfig& layer, const CRBMParams& p,
                                    std::span<const EncodedShingle> batch) {
  if (batch.empty()) throw ContractError("empty shingle batch");
  auto table = exact_enumerate(layer, p);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(layer.visible()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].fully_observed()) throw ContractError("exact gradient needs fully observed shingles");
    X.row(static_cast<Eigen::Index>(i)) = batch[i].values.transpose();
  }
  CRBMParams pos = mean_statistics(layer, p, X, hidden_probabilities(layer, p, X));
  auto marg = table.visible_marginals();
  Eigen::MatrixXd Xm(static_cast<Eigen::Index>(marg.size()), X.cols());
  Eigen::VectorXd w(static_cast<Eigen::Index>(marg.size()));
  for (std::size_t x = 0; x < marg.size(); ++x) {
    Xm.row(static_cast<Eigen::Index>(x)) = EnumerationTable::bits(x, layer.visible()).transpose();
    w[static_cast<Eigen::Index>(x)] = marg[x];
  }
  CRBMParams neg = weighted_statistics(layer, p, Xm, hidden_probabilities(layer, p, Xm), w);
  return pos - neg;
}

// ---- persistent chains and PCD --------------------------------------------

struct PersistentChains {
  ChainBatch batch;

  std::size_t size() const { return batch.size(); }

  /// Chains start at data shingles (missing cells drawn from the biases).
  static PersistentChains init(const LayerConfig& layer, const CRBMParams& p, std::span<const EncodedShingle> data,
                               std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ContractError("need at least one persistent chain");
    PersistentChains c{ChainBatch::make(layer, n)};
    for (std::size_t i = 0; i < n; ++i) {
      c.batch.rngs[i] = Rng(seed, {0xc4a1ULL, i});
      if (data.empty()) continue;
      const auto& sh = data[i % data.size()];
      c.batch.visible.row(static_cast<Eigen::Index>(i)) = sh.values.transpose();
      c.batch.clamp.row(static_cast<Eigen::Index>(i)) = sh.observed.transpose();
    }
    init_from_bias(layer, p, c.batch);
    c.batch.clamp.setConstant(false);
    return c;
  }

  friend bool operator==(const PersistentChains& a, const PersistentChains& b) {
    return a.batch.visible == b.batch.visible && a.batch.hidden == b.batch.hidden && a.batch.rngs == b.batch.rngs;
  }
};

struct PcdResult {
  CRBMParams gradient;
  Eigen::MatrixXd data_visible;  // positive phase, missing cells imputed
  Eigen::MatrixXd data_hidden;   // hidden probabilities, positive phase
  Eigen::MatrixXd model_hidden;  // hidden probabilities, chains
};

/// One persistent-contrastive-divergence gradient estimate. `step` keys the
/// positive-phase random streams.
inline PcdResult pcd_step(const LayerConfig& layer, const CRBMParams& p, std::span<const EncodedShingle> batch,
                          PersistentChains& chains, const TrainConfig& cfg, std::uint64_t step = 0) {
  if (batch.empty()) throw ContractError("empty shingle batch");
  check_shape(layer, p);
  const auto N = static_cast<Eigen::Index>(batch.size());
  PcdResult r;
  r.data_visible.resize(N, static_cast<Eigen::Index>(layer.visible()));
  std::vector<std::size_t> incomplete;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    r.data_visible.row(static_cast<Eigen::Index>(i)) = batch[i].values.transpose();
    if (!batch[i].fully_observed()) incomplete.push_back(i);
  }
  if (!incomplete.empty()) {
    ChainBatch pos = ChainBatch::make(layer, incomplete.size());
    for (std::size_t k = 0; k < incomplete.size(); ++k) {
      const auto& sh = batch[incomplete[k]];
      pos.visible.row(static_cast<Eigen::Index>(k)) = sh.values.transpose();
      pos.clamp.row(static_cast<Eigen::Index>(k)) = sh.observed.transpose();
      pos.rngs[k] = Rng(cfg.seed, {0x9051ULL, step, sh.id});
    }
    init_from_bias(layer, p, pos);
    gibbs_sweeps(layer, p, pos, cfg.mc_steps);
    for (std::size_t k = 0; k < incomplete.size(); ++k)
      r.data_visible.row(static_cast<Eigen::Index>(incomplete[k])) = pos.visible.row(static_cast<Eigen::Index>(k));
  }
  r.data_hidden = hidden_probabilities(layer, p, r.data_visible);
  gibbs_sweeps(layer, p, chains.batch, cfg.mc_steps);
  r.model_hidden = hidden_probabilities(layer, p, chains.batch.visible);
  r.gradient = mean_statistics(layer, p, r.data_visible, r.data_hidden) -
               mean_statistics(layer, p, chains.batch.visible, r.model_hidden);
  r.gradient.weights -= cfg.weight_penalty * p.weights;
  return r;
}

// ---- adversary --------------------------------------------------------------

struct AdversaryResult {
  CRBMParams gradient;          // already scaled by λ
  double critic_accuracy = 0.5;
  stats::LogisticModel critic;
};

/// Linear critic on mean hidden activations, refit every step to separate
/// data (label 1) from fantasy chains (label 0). The contribution is the
/// gradient of the critic's mean score under the model,
/// Cov_chains(score, -∂F/∂θ), scaled by λ.
inline AdversaryResult adversary_gradient(const LayerConfig& layer, const CRBMParams& p,
                                          const Eigen::MatrixXd& data_hidden, const Eigen::MatrixXd& chain_visible,
                                          const Eigen::MatrixXd& chain_hidden, double lambda) {
  if (!(lambda >= 0)) throw ContractError("adversary weight must be non-negative");
  AdversaryResult r{CRBMParams::zeros(layer), 0.5, {}};
  if (lambda == 0.0) return r;
  const auto nd = data_hidden.rows(), nc = chain_hidden.rows();
  Eigen::MatrixXd F(nd + nc, data_hidden.cols());
  F << data_hidden, chain_hidden;
  Eigen::VectorXd y(nd + nc);
  y.head(nd).setOnes();
  y.tail(nc).setZero();
  r.critic = stats::fit_logistic(F, y, 1.0, 10, 1e-6);
  Eigen::VectorXd prob = r.critic.predict(F);
  double correct = 0;
  for (Eigen::Index i = 0; i < prob.size(); ++i) correct += (prob[i] >= 0.5) == (y[i] == 1.0);
  r.critic_accuracy = correct / static_cast<double>(prob.size());
  Eigen::VectorXd score = chain_hidden * r.critic.coefficients;
  Eigen::VectorXd w = (score.array() - score.mean()) / static_cast<double>(nc);
  r.gradient = lambda * weighted_statistics(layer, p, chain_visible, chain_hidden, w);
  return r;
}

/// (1-λ) g_pl + g_adv, where g_adv already carries its factor λ. Returns
/// g_pl itself when λ = 0.
inline CRBMParams beam_gradient(const CRBMParams& g_pl, const CRBMParams& g_adv, double lambda) {
  if (lambda == 0.0) return g_pl;
  return (1.0 - lambda) * g_pl + g_adv;
}

// ---- optimizer --------------------------------------------------------------

struct OptimizerState {
  CRBMParams first;
  CRBMParams second;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState for_params(const CRBMParams& p) {
    auto z = CRBMParams::zeros(static_cast<std::size_t>(p.location.size()),
                               static_cast<std::size_t>(p.hidden_bias.size()));
    return {z, z};
  }
};

inline std::string describe_non_finite(const CRBMParams& g) {
  std::ostringstream s;
  auto count = [](const auto& m) { return (!m.array().isFinite()).count(); };
  s << "non-finite entries: location " << count(g.location) << ", log_scale " << count(g.log_scale)
    << ", hidden_bias " << count(g.hidden_bias) << ", weights " << count(g.weights);
  return s.str();
}

/// Adam step in the ascent direction (the gradient is of a log-likelihood).
inline void adam_update(OptimizerState& opt, CRBMParams& p, const CRBMParams& g, double learning_rate) {
  if (!g.finite()) throw NumericError("gradient at optimizer step " + std::to_string(opt.step + 1) + ": " +
                                      describe_non_finite(g));
  if (g.location.size() != p.location.size() || g.weights.rows() != p.weights.rows() ||
      g.weights.cols() != p.weights.cols())
    throw ContractError("gradient shape does not match parameters");
  ++opt.step;
  const double b1 = opt.beta1, b2 = opt.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(opt.step));
  auto apply = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() += learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.epsilon);
  };
  apply(p.location, opt.first.location, opt.second.location, g.location);
  apply(p.log_scale, opt.first.log_scale, opt.second.log_scale, g.log_scale);
  apply(p.hidden_bias, opt.first.hidden_bias, opt.second.hidden_bias, g.hidden_bias);
  apply(p.weights, opt.first.weights, opt.second.weights, g.weights);
}

// ---- training loop ----------------------------------------------------------

inline constexpr double kMinScale = 1e-3;

struct EpochLog {
  int epoch = 0;
  double recon_error = 0.0;
  double critic_accuracy = 0.5;
  double grad_norm = 0.0;
};

struct TrainResult {
  CRBMParams params;
  std::vector<EpochLog> log;
};

inline void write_training_log(const std::vector<EpochLog>& log, std::ostream& out) {
  out << "epoch,recon_error,critic_accuracy,grad_norm\n";
  for (const auto& e : log)
    out << e.epoch << ',' << csv::number(e.recon_error) << ',' << csv::number(e.critic_accuracy) << ','
        << csv::number(e.grad_norm) << '\n';
}

/// Raised when parameters stop being finite; carries the last finite ones.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, CRBMParams checkpoint_, int epoch_)
      : NumericError(what), checkpoint(std::move(checkpoint_)), epoch(epoch_) {}
  CRBMParams checkpoint;
  int epoch;
};

/// Weights ~ N(0, 0.01²); visible biases from data moments; hidden biases
/// ~ N(0, beta_std²).
inline CRBMParams initialize_params(const LayerConfig& layer, std::span<const EncodedShingle> data,
                                    const TrainConfig& cfg) {
  CRBMParams p = CRBMParams::zeros(layer);
  Rng rng(cfg.seed, {0x1417ULL});
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal(0.0, 0.01);
  for (Eigen::Index m = 0; m < p.hidden_bias.size(); ++m) p.hidden_bias[m] = rng.normal(0.0, cfg.beta_std);
  for (std::size_t j = 0; j < layer.visible(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    double n = 0, s = 0, ss = 0;
    for (const auto& sh : data)
      if (sh.observed[jj]) {
        n += 1;
        s += sh.values[jj];
        ss += sh.values[jj] * sh.values[jj];
      }
    double mean = n > 0 ? s / n : 0.0;
    switch (layer.units[j].kind) {
      case UnitKind::gaussian: {
        double var = n > 1 ? (ss - n * mean * mean) / (n - 1) : 1.0;
        p.location[jj] = mean;
        p.log_scale[jj] = std::log(std::max(std::sqrt(std::max(var, 0.0)), kMinScale));
        if (n < 2) p.log_scale[jj] = 0.0;
        break;
      }
      case UnitKind::binary: {
        double q = n > 0 ? std::clamp(mean, 0.01, 0.99) : 0.5;
        p.location[jj] = std::log(q / (1 - q));
        break;
      }
      case UnitKind::softmax: p.location[jj] = std::log(n > 0 ? std::max(mean, 0.01) : 1.0); break;
    }
  }
  return p;
}

/// Mean squared error of the mean-field reconstruction over observed cells.
inline double reconstruction_error(const LayerConfig& layer, const CRBMParams& p,
                                   std::span<const EncodedShingle> batch, const Eigen::MatrixXd& H) {
  Eigen::MatrixXd act = H * p.weights.transpose();
  act.rowwise() += p.location.transpose();
  double err = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < layer.visible(); ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      if (!batch[i].observed[jj]) continue;
      double recon = act(ii, jj);
      const auto& u = layer.units[j];
      if (u.kind == UnitKind::binary) {
        recon = logistic(recon);
      } else if (u.kind == UnitKind::softmax) {
        const auto& members = layer.softmax_blocks[static_cast<std::size_t>(u.block)];
        double mx = -std::numeric_limits<double>::infinity(), z = 0;
        for (auto k : members) mx = std::max(mx, act(ii, static_cast<Eigen::Index>(k)));
        for (auto k : members) z += std::exp(act(ii, static_cast<Eigen::Index>(k)) - mx);
        recon = std::exp(recon - mx) / z;
      }
      double d = recon - batch[i].values[jj];
      err += d * d;
      ++n;
    }
  }
  return n ? err / static_cast<double>(n) : 0.0;
}

namespace detail {

/// Two-window Gibbs sampler that fills slot 1 of a (0, 1, 2) triple using
/// a lag-1 model applied to windows (0, 1) and (1, 2). Cells shared by both
/// windows are drawn from the product of the two conditionals.
/// `state` holds slots 0, 1, 2 then the static block (imputer encoding);
/// cells with `clamp` set are kept.
inline void two_window_gibbs(const Model& imp, Eigen::VectorXd& state, const std::vector<bool>& clamp, Rng& rng,
                             int steps) {
  const auto& L = imp.layer;
  const auto& p = imp.params;
  const auto w = static_cast<Eigen::Index>(L.slot_width);
  const auto s = static_cast<Eigen::Index>(L.static_width);
  const auto V = static_cast<Eigen::Index>(L.visible());
  // For every state cell: list of (window, layer cell).
  std::vector<std::vector<std::pair<int, Eigen::Index>>> parts(static_cast<std::size_t>(3 * w + s));
  std::vector<std::size_t> layer_cell(parts.size());
  for (Eigen::Index j = 0; j < w; ++j) {
    parts[static_cast<std::size_t>(j)] = {{0, j}};
    parts[static_cast<std::size_t>(w + j)] = {{0, w + j}, {1, j}};
    parts[static_cast<std::size_t>(2 * w + j)] = {{1, w + j}};
    for (int k = 0; k < 3; ++k) layer_cell[static_cast<std::size_t>(k * w + j)] = static_cast<std::size_t>(j);
  }
  for (Eigen::Index j = 0; j < s; ++j) {
    parts[static_cast<std::size_t>(3 * w + j)] = {{0, 2 * w + j}, {1, 2 * w + j}};
    layer_cell[static_cast<std::size_t>(3 * w + j)] = static_cast<std::size_t>(2 * w + j);
  }
  auto window = [&](int k) {
    Eigen::VectorXd x(V);
    x << state.segment(k * w, 2 * w), state.tail(s);
    return x;
  };
  Eigen::VectorXd sd = p.log_scale.array().exp();
  auto resample = [&](const Eigen::VectorXd& actA, const Eigen::VectorXd& actB) {
    const Eigen::VectorXd* acts[2] = {&actA, &actB};
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const auto& u = L.units[layer_cell[c]];
      if (u.kind == UnitKind::gaussian) {
        double prec = 0, num = 0;
        for (auto [win, j] : parts[c]) {
          double pr = 1.0 / (sd[j] * sd[j]);
          prec += pr;
          num += (*acts[win])[j] * pr;
        }
        double x = num / prec + rng.normal() / std::sqrt(prec);
        if (!clamp[c]) state[static_cast<Eigen::Index>(c)] = x;
      } else if (u.kind == UnitKind::binary) {
        double a = 0;
        for (auto [win, j] : parts[c]) a += (*acts[win])[j];
        double x = rng.uniform() < logistic(a) ? 1.0 : 0.0;
        if (!clamp[c]) state[static_cast<Eigen::Index>(c)] = x;
      } else {
        const auto& members = L.softmax_blocks[static_cast<std::size_t>(u.block)];
        if (members.front() != layer_cell[c]) continue;
        std::vector<double> a(members.size(), 0.0);
        for (std::size_t k = 0; k < members.size(); ++k)
          for (auto [win, j] : parts[c + k]) a[k] += (*acts[win])[j];
        double mx = *std::max_element(a.begin(), a.end()), z = 0;
        for (auto& v : a) z += (v = std::exp(v - mx));
        double r = rng.uniform() * z;
        std::size_t pick = a.size() - 1;
        for (std::size_t k = 0; k < a.size(); ++k) {
          if (r < a[k]) {
            pick = k;
            break;
          }
          r -= a[k];
        }
        if (clamp[c]) continue;
        for (std::size_t k = 0; k < a.size(); ++k) state[static_cast<Eigen::Index>(c + k)] = k == pick ? 1.0 : 0.0;
      }
    }
  };
  Eigen::VectorXd zero = p.location;
  resample(zero, zero);
  for (int step = 0; step < steps; ++step) {
    Eigen::VectorXd h[2];
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd q = hidden_conditional(L, p, window(k));
      h[k].resize(q.size());
      for (Eigen::Index m = 0; m < q.size(); ++m) h[k][m] = rng.uniform() < q[m] ? 1.0 : 0.0;
    }
    Eigen::VectorXd actA = p.weights * h[0] + p.location;
    Eigen::VectorXd actB = p.weights * h[1] + p.location;
    resample(actA, actB);
  }
}

}  // namespace detail

/// Fill the missing middle visit of a type-II lag-2 shingle with an
/// auxiliary lag-1 model. The shingle's variables must be the imputer's
/// (longitudinal and background, in the imputer's order).
inline Shingle impute_type_II(const Model& imputer, const Shingle& sh, std::uint64_t seed, int steps = 25) {
  if (sh.kind != ShingleKind::type_two)
    throw ContractError("only type-II shingles can be imputed (got " + to_string(sh.kind) + ")");
  const auto& L = imputer.layer;
  if (L.lag != 1) throw ContractError("the imputer must be a lag-1 model");
  auto longi = L.longitudinal_variables();
  auto back = L.background_variables();
  if (sh.windows.size() != 3 || sh.windows[0].size() != longi.size() || sh.background.size() != back.size())
    throw ContractError("shingle layout does not match the imputer's variables");
  const auto w = L.slot_width;
  Eigen::VectorXd state = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * w + L.static_width));
  std::vector<bool> clamp(static_cast<std::size_t>(state.size()), false);
  std::vector<double> buf;
  auto put = [&](std::size_t v, const Cell& c, std::size_t at) {
    if (!c) return;
    buf.assign(unit_width(L.variables[v]), 0.0);
    encode_cell(L.variables[v], imputer.stats.at(L.variables[v].name), *c, buf);
    for (std::size_t u = 0; u < buf.size(); ++u) {
      state[static_cast<Eigen::Index>(at + u)] = buf[u];
      clamp[at + u] = true;
    }
  };
  for (int k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < longi.size(); ++j)
      if (k != 1) put(longi[j], sh.windows[static_cast<std::size_t>(k)][j], k * w + L.local_offset(longi[j]));
  for (std::size_t j = 0; j < back.size(); ++j) put(back[j], sh.background[j], 3 * w + L.local_offset(back[j]));
  Rng rng(seed, {0x1e9ULL, sh.subject, static_cast<std::uint64_t>(sh.start)});
  detail::two_window_gibbs(imputer, state, clamp, rng, steps);
  Shingle out = sh;
  for (std::size_t j = 0; j < longi.size(); ++j) {
    const auto& spec = L.variables[longi[j]];
    auto at = static_cast<Eigen::Index>(w + L.local_offset(longi[j]));
    std::vector<double> units(state.data() + at, state.data() + at + static_cast<Eigen::Index>(unit_width(spec)));
    out.windows[1][j] = decode_cell(spec, imputer.stats.at(spec.name), units);
  }
  out.kind = ShingleKind::complete;
  return out;
}

/// Encoded-space counterpart used during training: the imputer may carry
/// different encoding statistics and a different variable set; values are
/// translated by name. Middle-slot cells the imputer does not model stay
/// missing.
inline EncodedShingle impute_encoded(const Model& imputer, const LayerConfig& layer, const EncodingStats& stats,
                                     const EncodedShingle& sh, std::uint64_t seed, int steps = 25) {
  if (sh.kind != ShingleKind::type_two) throw ContractError("only type-II shingles can be imputed");
  const auto& L = imputer.layer;
  const auto w = L.slot_width;
  Eigen::VectorXd state = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * w + L.static_width));
  std::vector<bool> clamp(static_cast<std::size_t>(state.size()), false);
  struct Link {
    std::size_t layer_var, imp_var;
  };
  std::vector<Link> links;
  for (std::size_t v = 0; v < L.variables.size(); ++v)
    for (std::size_t u = 0; u < layer.variables.size(); ++u)
      if (layer.variables[u].name == L.variables[v].name) links.push_back({u, v});
  auto to_imp = [&](const VariableSpec& spec, double x) {
    if (unit_kind(spec) != UnitKind::gaussian) return x;
    const auto& a = stats.at(spec.name);
    const auto& b = imputer.stats.at(spec.name);
    return (x * a.scale + a.mean - b.mean) / b.scale;
  };
  auto from_imp = [&](const VariableSpec& spec, double x) {
    if (unit_kind(spec) != UnitKind::gaussian) return x;
    const auto& a = stats.at(spec.name);
    const auto& b = imputer.stats.at(spec.name);
    return (x * b.scale + b.mean - a.mean) / a.scale;
  };
  for (const auto& lk : links) {
    const auto& spec = L.variables[lk.imp_var];
    bool longitudinal = spec.longitudinal();
    for (int k = 0; k < (longitudinal ? 3 : 1); ++k) {
      if (longitudinal && k == 1) continue;
      std::size_t src = layer.cell(lk.layer_var, k);
      std::size_t dst = longitudinal ? k * w + L.local_offset(lk.imp_var) : 3 * w + L.local_offset(lk.imp_var);
      for (std::size_t u = 0; u < unit_width(spec); ++u) {
        auto si = static_cast<Eigen::Index>(src + u);
        if (!sh.observed[si]) continue;
        state[static_cast<Eigen::Index>(dst + u)] = to_imp(spec, sh.values[si]);
        clamp[dst + u] = true;
      }
    }
  }
  Rng rng(seed, {0x1e9ULL, sh.subject, static_cast<std::uint64_t>(sh.start)});
  detail::two_window_gibbs(imputer, state, clamp, rng, steps);
  EncodedShingle out = sh;
  for (const auto& lk : links) {
    const auto& spec = L.variables[lk.imp_var];
    if (!spec.longitudinal()) continue;
    std::size_t dst = layer.cell(lk.layer_var, 1);
    std::size_t src = w + L.local_offset(lk.imp_var);
    for (std::size_t u = 0; u < unit_width(spec); ++u) {
      auto di = static_cast<Eigen::Index>(dst + u);
      if (out.observed[di]) continue;
      out.values[di] = from_imp(spec, state[static_cast<Eigen::Index>(src + u)]);
      out.observed[di] = true;
    }
  }
  out.kind = ShingleKind::complete;
  return out;
}

struct TrainOptions {
  const Model* imputer = nullptr;  // fills type-II shingles before training
  int impute_steps = 25;
};

/// Training shingles: type-I dropped, type-II imputed when an imputer is
/// supplied (otherwise their missing slot is sampled in the positive phase).
inline std::vector<EncodedShingle> training_shingles(const EncodedDataset& enc, const LayerConfig& layer,
                                                     const TrainConfig& cfg, const TrainOptions& opt = {}) {
  std::vector<EncodedShingle> out;
  for (auto& sh : encoded_shingles(enc, layer)) {
    if (sh.kind == ShingleKind::type_one) continue;
    if (sh.kind == ShingleKind::type_two && opt.imputer)
      sh = impute_encoded(*opt.imputer, layer, enc.stats, sh, cfg.seed, opt.impute_steps);
    sh.id = out.size();
    out.push_back(std::move(sh));
  }
  return out;
}

inline TrainResult train_on_shingles(const LayerConfig& layer, std::vector<EncodedShingle> data,
                                     const TrainConfig& cfg) {
  cfg.validate();
  if (layer.hidden != cfg.hidden_units)
    throw ContractError("layer has " + std::to_string(layer.hidden) + " hidden units but the configuration asks for " +
                        std::to_string(cfg.hidden_units));
  if (data.empty()) throw ContractError("no usable training shingles");
  TrainResult res{initialize_params(layer, data, cfg), {}};
  if (cfg.epochs == 0) return res;
  CRBMParams& p = res.params;
  auto chains = PersistentChains::init(layer, p, data, static_cast<std::size_t>(cfg.batch_size), cfg.seed);
  auto opt = OptimizerState::for_params(p);
  std::vector<std::size_t> order(data.size());
  std::vector<EncodedShingle> batch;
  std::uint64_t step = 0;
  const double log_floor = std::log(kMinScale);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    CRBMParams checkpoint = p;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffler(cfg.seed, {0x5f1ULL, static_cast<std::uint64_t>(epoch)});
    shuffle(order, shuffler);
    EpochLog log{epoch + 1, 0.0, 0.5, 0.0};
    double batches = 0, acc = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
      batch.clear();
      for (std::size_t i = b0; i < std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size)); ++i)
        batch.push_back(data[order[i]]);
      auto pcd = pcd_step(layer, p, batch, chains, cfg, step++);
      CRBMParams g = pcd.gradient;
      if (cfg.adversary_weight > 0) {
        auto adv = adversary_gradient(layer, p, pcd.data_hidden, chains.batch.visible, pcd.model_hidden,
                                      cfg.adversary_weight);
        g = beam_gradient(pcd.gradient, adv.gradient, cfg.adversary_weight);
        acc += adv.critic_accuracy;
      }
      log.recon_error += reconstruction_error(layer, p, batch, pcd.data_hidden);
      log.grad_norm += g.norm();
      batches += 1;
      try {
        adam_update(opt, p, g, cfg.learning_rate);
      } catch (const NumericError& e) {
        throw TrainingDiverged(std::string("training diverged in epoch ") + std::to_string(epoch + 1) + ": " +
                                   e.what(),
                               checkpoint, epoch + 1);
      }
      for (std::size_t j = 0; j < layer.visible(); ++j) {
        auto jj = static_cast<Eigen::Index>(j);
        if (layer.units[j].kind == UnitKind::gaussian) p.log_scale[jj] = std::max(p.log_scale[jj], log_floor);
        else p.log_scale[jj] = 0.0;
      }
      if (!p.finite())
        throw TrainingDiverged("parameters became non-finite in epoch " + std::to_string(epoch + 1), checkpoint,
                               epoch + 1);
    }
    log.recon_error /= batches;
    log.grad_norm /= batches;
    if (cfg.adversary_weight > 0) log.critic_accuracy = acc / batches;
    res.log.push_back(log);
  }
  return res;
}

/// Train one CRBM on the shingles of `enc` laid out by `layer`. The input
/// dataset is never modified.
inline TrainResult train_crbm(const EncodedDataset& enc, const LayerConfig& layer, const TrainConfig& cfg,
                              const TrainOptions& opt = {}) {
  cfg.validate();
  return train_on_shingles(layer, training_shingles(enc, layer, cfg, opt), cfg);
}

/// Variables the imputer models: every 3-month-group variable plus background.
inline Schema imputer_variables(const Schema& schema) {
  Schema out;
  for (const auto& v : schema)
    if (v.in_three_month() || !v.longitudinal()) out.push_back(v);
  return out;
}

/// Lag-1, 3-month-cadence imputation model.
inline Model train_imputer(const EncodedDataset& enc, const TrainConfig& cfg) {
  if (enc.cadence_months != 3) throw ContractError("the imputer is trained on 3-month data");
  Schema vars = imputer_variables(enc.schema);
  auto layer = make_layer(vars, 1, 3, cfg.hidden_units);
  auto res = train_crbm(enc, layer, cfg);
  return {layer, enc.stats.subset(vars), res.params};
}

inline Model train_imputer(const EncodedDataset& enc, std::uint64_t seed) {
  return train_imputer(enc, imputer_config(seed));
}

}  // namespace crbm
