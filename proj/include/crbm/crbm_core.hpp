#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crbm/encoding.hpp"
#include "crbm/errors.hpp"
#include "crbm/random.hpp"
#include "crbm/schema.hpp"

namespace crbm {

/// One visible cell of the CRBM: a unit of a variable at a window slot
/// (slot -1 is the static/background block).
struct VisibleUnit {
  std::string variable;
  int slot = 0;
  UnitKind kind = UnitKind::gaussian;
  int block = -1;  // softmax block index, -1 otherwise
};

/// Layout of a lag-L CRBM over a set of variables. Visible cells are ordered
/// slot 0 .. slot L (longitudinal units of each slot, schema order), then the
/// static block (background variables).
struct LayerConfig {
  int lag = 1;
  int cadence_months = 3;
  int hidden = 1;
  Schema variables;
  std::vector<VisibleUnit> units;
  std::vector<std::vector<std::size_t>> softmax_blocks;
  std::size_t slot_width = 0;
  std::size_t static_width = 0;

  std::size_t visible() const { return units.size(); }
  int slots() const { return lag + 1; }
  std::size_t slot_offset(int slot) const { return static_cast<std::size_t>(slot) * slot_width; }
  std::size_t static_offset() const { return static_cast<std::size_t>(lag + 1) * slot_width; }

  std::vector<std::size_t> longitudinal_variables() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < variables.size(); ++v)
      if (variables[v].longitudinal()) out.push_back(v);
    return out;
  }
  std::vector<std::size_t> background_variables() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < variables.size(); ++v)
      if (!variables[v].longitudinal()) out.push_back(v);
    return out;
  }

  /// Offset of variable `v` (index into `variables`) within its block.
  std::size_t local_offset(std::size_t v) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < v; ++k)
      if (variables[k].longitudinal() == variables[v].longitudinal()) off += unit_width(variables[k]);
    return off;
  }

  /// First visible cell of variable `v` at `slot` (ignored for background).
  std::size_t cell(std::size_t v, int slot) const {
    return variables[v].longitudinal() ? slot_offset(slot) + local_offset(v) : static_offset() + local_offset(v);
  }

  bool all_binary() const {
    return std::all_of(units.begin(), units.end(), [](const auto& u) { return u.kind == UnitKind::binary; });
  }

  friend bool operator==(const LayerConfig& a, const LayerConfig& b) {
    return a.lag == b.lag && a.cadence_months == b.cadence_months && a.hidden == b.hidden &&
           a.variables == b.variables;
  }
};

inline LayerConfig make_layer(const Schema& variables, int lag, int cadence_months, int hidden) {
  if (lag < 1) throw ContractError("lag must be at least 1");
  if (hidden < 1) throw ContractError("hidden unit count must be at least 1");
  LayerConfig layer;
  layer.lag = lag;
  layer.cadence_months = cadence_months;
  layer.hidden = hidden;
  layer.variables = variables;
  for (const auto& v : variables) {
    v.validate();
    (v.longitudinal() ? layer.slot_width : layer.static_width) += unit_width(v);
  }
  auto add_units = [&](const VariableSpec& v, int slot) {
    int block = -1;
    std::vector<std::size_t> members;
    if (v.domain == Domain::categorical) block = static_cast<int>(layer.softmax_blocks.size());
    for (std::size_t u = 0; u < unit_width(v); ++u) {
      members.push_back(layer.units.size());
      layer.units.push_back({v.name, slot, unit_kind(v), block});
    }
    if (block >= 0) layer.softmax_blocks.push_back(members);
  };
  for (int slot = 0; slot <= lag; ++slot)
    for (const auto& v : variables)
      if (v.longitudinal()) add_units(v, slot);
  for (const auto& v : variables)
    if (!v.longitudinal()) add_units(v, -1);
  if (layer.units.empty()) throw ContractError("layer has no visible units");
  return layer;
}

/// Energy-function parameters. Also used as the gradient container.
///   location  m_ij   visible bias location
///   log_scale log σ_ij (Gaussian units; zero and unused otherwise)
///   hidden_bias b_μ
///   weights   W (visible x hidden)
struct CRBMParams {
  Eigen::VectorXd location;
  Eigen::VectorXd log_scale;
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd weights;

  static CRBMParams zeros(std::size_t visible, std::size_t hidden) {
    auto v = static_cast<Eigen::Index>(visible);
    auto h = static_cast<Eigen::Index>(hidden);
    return {Eigen::VectorXd::Zero(v), Eigen::VectorXd::Zero(v), Eigen::VectorXd::Zero(h), Eigen::MatrixXd::Zero(v, h)};
  }
  static CRBMParams zeros(const LayerConfig& layer) {
    return zeros(layer.visible(), static_cast<std::size_t>(layer.hidden));
  }

  bool finite() const {
    return location.allFinite() && log_scale.allFinite() && hidden_bias.allFinite() && weights.allFinite();
  }

  std::size_t size() const {
    return static_cast<std::size_t>(location.size() + log_scale.size() + hidden_bias.size() + weights.size());
  }

  CRBMParams& operator+=(const CRBMParams& o) {
    location += o.location;
    log_scale += o.log_scale;
    hidden_bias += o.hidden_bias;
    weights += o.weights;
    return *this;
  }
  CRBMParams& operator-=(const CRBMParams& o) {
    location -= o.location;
    log_scale -= o.log_scale;
    hidden_bias -= o.hidden_bias;
    weights -= o.weights;
    return *this;
  }
  CRBMParams& operator*=(double s) {
    location *= s;
    log_scale *= s;
    hidden_bias *= s;
    weights *= s;
    return *this;
  }
  friend CRBMParams operator+(CRBMParams a, const CRBMParams& b) { return a += b; }
  friend CRBMParams operator-(CRBMParams a, const CRBMParams& b) { return a -= b; }
  friend CRBMParams operator*(double s, CRBMParams a) { return a *= s; }

  /// Flat view order: location, log_scale, hidden_bias, weights (column-major).
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    Eigen::Index k = 0;
    out.segment(k, location.size()) = location;
    k += location.size();
    out.segment(k, log_scale.size()) = log_scale;
    k += log_scale.size();
    out.segment(k, hidden_bias.size()) = hidden_bias;
    k += hidden_bias.size();
    out.segment(k, weights.size()) = Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
    return out;
  }

  double norm() const {
    return std::sqrt(location.squaredNorm() + log_scale.squaredNorm() + hidden_bias.squaredNorm() +
                     weights.squaredNorm());
  }

  friend bool operator==(const CRBMParams& a, const CRBMParams& b) {
    return a.location == b.location && a.log_scale == b.log_scale && a.hidden_bias == b.hidden_bias &&
           a.weights == b.weights;
  }
};

inline void check_shape(const LayerConfig& layer, const CRBMParams& p) {
  auto v = static_cast<Eigen::Index>(layer.visible());
  if (p.location.size() != v || p.log_scale.size() != v || p.weights.rows() != v ||
      p.hidden_bias.size() != layer.hidden || p.weights.cols() != layer.hidden)
    throw ContractError("parameter dimensions do not match the layer configuration");
}

inline double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// log(1 + e^a) without overflow.
inline double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

/// 1/σ² per visible cell; 1 for binary and softmax cells.
inline Eigen::VectorXd inverse_variance(const LayerConfig& layer, const CRBMParams& p) {
  Eigen::VectorXd iv(static_cast<Eigen::Index>(layer.visible()));
  for (std::size_t j = 0; j < layer.visible(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    iv[jj] = layer.units[j].kind == UnitKind::gaussian ? std::exp(-2.0 * p.log_scale[jj]) : 1.0;
  }
  return iv;
}

/// Visible bias term Σ_j a_j(x_j): (x-m)²/(2σ²) for Gaussian cells, -m·x otherwise.
inline double visible_bias_energy(const LayerConfig& layer, const CRBMParams& p, const Eigen::VectorXd& x) {
  double e = 0.0;
  for (std::size_t j = 0; j < layer.visible(); ++j) {
    auto jj = static_cast<Eigen::Index>(j);
    if (layer.units[j].kind == UnitKind::gaussian) {
      double d = x[jj] - p.location[jj];
      e += d * d * std::exp(-2.0 * p.log_scale[jj]) / 2.0;
    } else {
      e -= p.location[jj] * x[jj];
    }
  }
  return e;
}

/// U(x, z) = Σ_j a_j(x_j) - Σ_jμ W_jμ (x_j/σ_j²) z_μ - Σ_μ b_μ z_μ  (ε_μ = 1).
inline double energy(const LayerConfig& layer, const CRBMParams& p, const Eigen::VectorXd& visible,
                     const Eigen::VectorXd& hidden) {
  check_shape(layer, p);
  if (visible.size() != static_cast<Eigen::Index>(layer.visible()) || hidden.size() != layer.hidden)
    throw ContractError("state dimensions do not match the layer configuration");
  if (!visible.allFinite() || !hidden.allFinite() || !p.finite())
    throw NumericError("energy evaluated at a non-finite state or parameter");
  Eigen::VectorXd scaled = visible.cwiseProduct(inverse_variance(layer, p));
  return visible_bias_energy(layer, p, visible) - scaled.dot(p.weights * hidden) - p.hidden_bias.dot(hidden);
}

/// Hidden pre-activations b + Wᵀ(x/σ²) for every row of X.
inline Eigen::MatrixXd hidden_activation(const LayerConfig& layer, const CRBMParams& p, const Eigen::MatrixXd& X) {
  Eigen::VectorXd iv = inverse_variance(layer, p);
  Eigen::MatrixXd A = (X.array().rowwise() * iv.transpose().array()).matrix() * p.weights;
  A.rowwise() += p.hidden_bias.transpose();
  return A;
}

/// p(z_μ = 1 | x) = logistic(b_μ + Σ_j W_jμ x_j / σ_j²).
inline Eigen::VectorXd hidden_conditional(const LayerConfig& layer, const CRBMParams& p, const Eigen::VectorXd& visible) {
  check_shape(layer, p);
  if (visible.size() != static_cast<Eigen::Index>(layer.visible()))
    throw ContractError("visible dimension does not match the layer configuration");
  Eigen::MatrixXd A = hidden_activation(layer, p, visible.transpose());
  return A.row(0).transpose().unaryExpr([](double a) { return logistic(a); });
}

inline Eigen::MatrixXd hidden_probabilities(const LayerConfig& layer, const CRBMParams& p, const Eigen::MatrixXd& X) {
  return hidden_activation(layer, p, X).unaryExpr([](double a) { return logistic(a); });
}

/// Conditional law of one visible cell given the hidden layer.
struct VisibleConditional {
  UnitKind kind = UnitKind::gaussian;
  double mean = 0.0;                  // Gaussian mean
  double sd = 1.0;                    // Gaussian scale
  double probability = 0.5;           // binary p(x = 1)
  std::vector<double> probabilities;  // softmax block, one per member
};

inline VisibleConditional visible_conditional(const LayerConfig& layer, const CRBMParams& p,
                                              const Eigen::VectorXd& hidden, std::size_t cell) {
  check_shape(layer, p);
  if (cell >= layer.visible()) throw ContractError("visible cell out of range");
  const auto& u = layer.units[cell];
  auto activation = [&](std::size_t j) {
    auto jj = static_cast<Eigen::Index>(j);
    return p.location[jj] + p.weights.row(jj).dot(hidden);
  };
  VisibleConditional out;
  out.kind = u.kind;
  switch (u.kind) {
    case UnitKind::gaussian:
      out.mean = activation(cell);
      out.sd = std::exp(p.log_scale[static_cast<Eigen::Index>(cell)]);
      break;
    case UnitKind::binary: out.probability = logistic(activation(cell)); break;
    case UnitKind::softmax: {
      const auto& members = layer.softmax_blocks[static_cast<std::size_t>(u.block)];
      double mx = -std::numeric_limits<double>::infinity();
      for (auto j : members) mx = std::max(mx, activation(j));
      double z = 0.0;
      for (auto j : members) {
        out.probabilities.push_back(std::exp(activation(j) - mx));
        z += out.probabilities.back();
      }
      for (auto& q : out.probabilities) q /= z;
      break;
    }
  }
  return out;
}

/// F(x) = -log Σ_z exp(-U(x, z)) in closed form for binary hidden units.
inline double free_energy(const LayerConfig& layer, const CRBMParams& p, const Eigen::VectorXd& visible) {
  check_shape(layer, p);
  if (visible.size() != static_cast<Eigen::Index>(layer.visible()))
    throw ContractError("visible dimension does not match the layer configuration");
  Eigen::MatrixXd A = hidden_activation(layer, p, visible.transpose());
  double f = visible_bias_energy(layer, p, visible);
  for (Eigen::Index m = 0; m < A.cols(); ++m) f -= softplus(A(0, m));
  return f;
}

// ---- Gibbs sampling -------------------------------------------------------

/// A population of chains advanced in lockstep. Row i of every matrix and
/// rngs[i] belong to chain i; each chain draws only from its own stream.
struct ChainBatch {
  Eigen::MatrixXd visible;  // N x V
  Eigen::MatrixXd hidden;   // N x M
  BoolMatrix clamp;         // N x V
  std::vector<Rng> rngs;

  std::size_t size() const { return rngs.size(); }

  static ChainBatch make(const LayerConfig& layer, std::size_t n) {
    auto nn = static_cast<Eigen::Index>(n);
    auto v = static_cast<Eigen::Index>(layer.visible());
    return {Eigen::MatrixXd::Zero(nn, v), Eigen::MatrixXd::Zero(nn, layer.hidden), BoolMatrix::Constant(nn, v, false),
            std::vector<Rng>(n)};
  }
};

inline void sample_hidden(const LayerConfig& layer, const CRBMParams& p, ChainBatch& b) {
  Eigen::MatrixXd P = hidden_probabilities(layer, p, b.visible);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    auto& rng = b.rngs[static_cast<std::size_t>(i)];
    for (Eigen::Index m = 0; m < P.cols(); ++m) b.hidden(i, m) = rng.uniform() < P(i, m) ? 1.0 : 0.0;
  }
}

/// Resample every unclamped visible cell given the hidden layer. Every chain
/// consumes the same number of draws whatever its clamp mask.
inline void sample_visible(const LayerConfig& layer, const CRBMParams& p, ChainBatch& b) {
  Eigen::MatrixXd act = b.hidden * p.weights.transpose();
  act.rowwise() += p.location.transpose();
  Eigen::VectorXd sd = p.log_scale.array().exp();
  const auto V = layer.visible();
  std::vector<double> probs;
  for (Eigen::Index i = 0; i < act.rows(); ++i) {
    auto& rng = b.rngs[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < V; ++j) {
      auto jj = static_cast<Eigen::Index>(j);
      const auto& u = layer.units[j];
      switch (u.kind) {
        case UnitKind::gaussian: {
          double x = act(i, jj) + sd[jj] * rng.normal();
          if (!b.clamp(i, jj)) b.visible(i, jj) = x;
          break;
        }
        case UnitKind::binary: {
          double x = rng.uniform() < logistic(act(i, jj)) ? 1.0 : 0.0;
          if (!b.clamp(i, jj)) b.visible(i, jj) = x;
          break;
        }
        case UnitKind::softmax: {
          const auto& members = layer.softmax_blocks[static_cast<std::size_t>(u.block)];
          if (members.front() != j) break;
          double mx = -std::numeric_limits<double>::infinity();
          for (auto k : members) mx = std::max(mx, act(i, static_cast<Eigen::Index>(k)));
          probs.clear();
          double z = 0.0;
          for (auto k : members) {
            probs.push_back(std::exp(act(i, static_cast<Eigen::Index>(k)) - mx));
            z += probs.back();
          }
          double r = rng.uniform() * z;
          std::size_t pick = members.size() - 1;
          for (std::size_t k = 0; k < members.size(); ++k) {
            if (r < probs[k]) {
              pick = k;
              break;
            }
            r -= probs[k];
          }
          if (b.clamp(i, static_cast<Eigen::Index>(members.front()))) break;
          for (std::size_t k = 0; k < members.size(); ++k)
            b.visible(i, static_cast<Eigen::Index>(members[k])) = k == pick ? 1.0 : 0.0;
          break;
        }
      }
    }
  }
}

/// k block-Gibbs sweeps: hidden | visible, then unclamped visible | hidden.
inline void gibbs_sweeps(const LayerConfig& layer, const CRBMParams& p, ChainBatch& b, int k) {
  if (k < 1) throw ContractError("Gibbs sampling needs at least one step");
  check_shape(layer, p);
  for (int s = 0; s < k; ++s) {
    sample_hidden(layer, p, b);
    sample_visible(layer, p, b);
  }
}

/// Draw unclamped cells from their bias-only distributions (hidden = 0).
inline void init_from_bias(const LayerConfig& layer, const CRBMParams& p, ChainBatch& b) {
  b.hidden.setZero();
  sample_visible(layer, p, b);
}

/// Single-chain state: visible cells, hidden units, clamp mask and stream.
struct GibbsState {
  Eigen::VectorXd visible;
  Eigen::VectorXd hidden;
  std::vector<bool> clamp;
  Rng rng;
};

inline GibbsState gibbs_sample(const LayerConfig& layer, const CRBMParams& p, GibbsState state, int k) {
  if (k < 1) throw ContractError("Gibbs sampling needs at least one step");
  if (state.visible.size() != static_cast<Eigen::Index>(layer.visible()) || state.clamp.size() != layer.visible())
    throw ContractError("Gibbs state does not match the layer configuration");
  ChainBatch b = ChainBatch::make(layer, 1);
  b.visible.row(0) = state.visible.transpose();
  if (state.hidden.size() == layer.hidden) b.hidden.row(0) = state.hidden.transpose();
  for (std::size_t j = 0; j < layer.visible(); ++j) b.clamp(0, static_cast<Eigen::Index>(j)) = state.clamp[j];
  b.rngs[0] = std::move(state.rng);
  gibbs_sweeps(layer, p, b, k);
  state.visible = b.visible.row(0).transpose();
  state.hidden = b.hidden.row(0).transpose();
  state.rng = std::move(b.rngs[0]);
  return state;
}

// ---- exact enumeration (test oracle) -------------------------------------

/// Exact joint distribution of a tiny all-binary model. State index packs
/// visible bits in the low bits and hidden bits above them.
struct EnumerationTable {
  std::size_t visible = 0;
  std::size_t hidden = 0;
  std::vector<double> probability;
  double log_partition = 0.0;

  static Eigen::VectorXd bits(std::uint64_t code, std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = (code >> i) & 1U ? 1.0 : 0.0;
    return v;
  }

  double joint(std::uint64_t x, std::uint64_t z) const { return probability[x | (z << visible)]; }

  double visible_marginal(std::uint64_t x) const {
    double s = 0.0;
    for (std::uint64_t z = 0; z < (1ULL << hidden); ++z) s += joint(x, z);
    return s;
  }

  std::vector<double> visible_marginals() const {
    std::vector<double> out(1ULL << visible);
    for (std::uint64_t x = 0; x < out.size(); ++x) out[x] = visible_marginal(x);
    return out;
  }

  /// p(x_cell = 1 | other visible cells as in x).
  double visible_conditional(std::uint64_t x, std::size_t cell) const {
    double p1 = visible_marginal(x | (1ULL << cell));
    double p0 = visible_marginal(x & ~(1ULL << cell));
    return p1 / (p0 + p1);
  }
};

inline EnumerationTable exact_enumerate(const LayerConfig& layer, const CRBMParams& p) {
  check_shape(layer, p);
  if (!layer.all_binary()) throw OracleScopeError("exact enumeration requires an all-binary model");
  std::size_t V = layer.visible(), M = static_cast<std::size_t>(layer.hidden);
  if (V + M > 20) throw OracleScopeError("exact enumeration limited to 20 units");
  EnumerationTable t{V, M, std::vector<double>(1ULL << (V + M)), 0.0};
  std::vector<double> logw(t.probability.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::uint64_t z = 0; z < (1ULL << M); ++z) {
    Eigen::VectorXd zv = EnumerationTable::bits(z, M);
    for (std::uint64_t x = 0; x < (1ULL << V); ++x) {
      double lw = -energy(layer, p, EnumerationTable::bits(x, V), zv);
      logw[x | (z << V)] = lw;
      mx = std::max(mx, lw);
    }
  }
  double z = 0.0;
  for (double lw : logw) z += std::exp(lw - mx);
  t.log_partition = mx + std::log(z);
  for (std::size_t i = 0; i < logw.size(); ++i) t.probability[i] = std::exp(logw[i] - t.log_partition);
  return t;
}

}  // namespace crbm
