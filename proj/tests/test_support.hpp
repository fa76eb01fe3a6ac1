#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crbm/crbm.hpp"

namespace testing_support {

using namespace crbm;

/// Two continuous 3-month variables, one binary 6-month variable, one shared
/// ordinal, and a categorical plus a continuous background variable.
inline Schema mixed_schema() {
  return {continuous_variable("score", Role::longitudinal, GroupPattern::three_month, 0, 100),
          continuous_variable("speed", Role::longitudinal, GroupPattern::both, -50, 50),
          ordinal_variable("stage", Role::longitudinal, GroupPattern::both, {0, 0.5, 1, 2, 3}),
          binary_variable("flag", Role::longitudinal, GroupPattern::six_month),
          categorical_variable("site", Role::background, GroupPattern::both, {"north", "south", "east"}),
          continuous_variable("age", Role::background, GroupPattern::both, 40, 100)};
}

/// Random panel on `schema` with the 6-month-only variables at even slots.
inline PanelDataset random_panel(const Schema& schema, int n, int visits, std::uint64_t seed,
                                 double missing = 0.1) {
  PanelDataset ds{schema, {}, 3, visits};
  for (int s = 0; s < n; ++s) {
    Rng rng(seed, {static_cast<std::uint64_t>(s)});
    SubjectRecord r{"P" + std::to_string(s), s % 2 ? "alpha" : "beta",
                    std::vector<std::vector<Cell>>(static_cast<std::size_t>(visits), std::vector<Cell>(schema.size()))};
    double level = rng.normal();
    for (int t = 0; t < visits; ++t)
      for (std::size_t v = 0; v < schema.size(); ++v) {
        const auto& spec = schema[v];
        if (!spec.longitudinal() && t > 0) continue;
        if (spec.longitudinal() && spec.groups == GroupPattern::six_month && t % 2) continue;
        if (t > 0 && rng.uniform() < missing) continue;
        double z = level + 0.2 * t + 0.5 * rng.normal();
        Cell c;
        switch (spec.domain) {
          case Domain::continuous: c = std::clamp(50 + 10 * z, spec.range_min + 1, spec.range_max - 1); break;
          case Domain::binary: c = z > 0 ? 1.0 : 0.0; break;
          case Domain::ordinal:
            c = spec.level_value(static_cast<std::size_t>(std::clamp(std::round(z + 2), 0.0, 4.0)));
            break;
          case Domain::categorical: c = static_cast<double>(rng.next() % spec.levels.size()); break;
        }
        if (spec.name == "speed") c = std::clamp(10 * z, -49.0, 49.0);
        r.visits[static_cast<std::size_t>(t)][v] = c;
      }
    ds.subjects.push_back(std::move(r));
  }
  return ds;
}

/// Tiny all-binary layer: `longitudinal` variables over lag+1 slots plus
/// `background` static bits.
inline LayerConfig binary_layer(int longitudinal, int background, int lag, int hidden) {
  Schema vars;
  for (int i = 0; i < longitudinal; ++i)
    vars.push_back(binary_variable("b" + std::to_string(i), Role::longitudinal, GroupPattern::three_month));
  for (int i = 0; i < background; ++i)
    vars.push_back(binary_variable("s" + std::to_string(i), Role::background, GroupPattern::both));
  return make_layer(vars, lag, 3, hidden);
}

inline CRBMParams random_params(const LayerConfig& layer, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed, {0x7e57ULL});
  CRBMParams p = CRBMParams::zeros(layer);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal(0, scale);
  for (Eigen::Index i = 0; i < p.location.size(); ++i) p.location[i] = rng.normal(0, scale);
  for (Eigen::Index i = 0; i < p.hidden_bias.size(); ++i) p.hidden_bias[i] = rng.normal(0, scale);
  for (std::size_t j = 0; j < layer.visible(); ++j)
    if (layer.units[j].kind == UnitKind::gaussian) p.log_scale[static_cast<Eigen::Index>(j)] = rng.normal(0, 0.3);
  return p;
}

inline std::uint64_t pack_bits(const Eigen::VectorXd& x) {
  std::uint64_t code = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] > 0.5) code |= 1ULL << i;
  return code;
}

}  // namespace testing_support
