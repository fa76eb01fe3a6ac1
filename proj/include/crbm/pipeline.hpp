#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crbm/composite.hpp"
#include "crbm/encoding.hpp"
#include "crbm/errors.hpp"
#include "crbm/model_io.hpp"
#include "crbm/panel.hpp"
#include "crbm/schema.hpp"
#include "crbm/training.hpp"

namespace crbm {

enum class ModelKind { three_month, six_month };

inline std::string to_string(ModelKind k) { return k == ModelKind::three_month ? "3mo" : "6mo"; }

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "3mo" || s == "3") return ModelKind::three_month;
  if (s == "6mo" || s == "6") return ModelKind::six_month;
  throw ContractError("unknown model kind '" + s + "' (expected 3mo or 6mo)");
}

inline int model_lag(ModelKind k) { return k == ModelKind::three_month ? 2 : 1; }
inline int model_cadence(ModelKind k) { return k == ModelKind::three_month ? 3 : 6; }

/// Variables of a component model: its group's longitudinal variables plus
/// every background variable.
inline Schema component_variables(const Schema& schema, ModelKind k) {
  Schema out;
  for (const auto& v : schema)
    if (!v.longitudinal() || (k == ModelKind::three_month ? v.in_three_month() : v.in_six_month())) out.push_back(v);
  return out;
}

inline LayerConfig component_layer(const Schema& schema, ModelKind k, int hidden) {
  return make_layer(component_variables(schema, k), model_lag(k), model_cadence(k), hidden);
}

/// Columns of `ds` restricted to `vars` (in that order).
inline PanelDataset project(const PanelDataset& ds, const Schema& vars) {
  std::vector<std::size_t> idx;
  for (const auto& v : vars) idx.push_back(require_variable(ds.schema, v.name));
  PanelDataset out{vars, {}, ds.cadence_months, ds.visit_count};
  for (const auto& s : ds.subjects) {
    SubjectRecord r{s.id, s.study, {}};
    for (const auto& row : s.visits) {
      std::vector<Cell> cells;
      for (auto k : idx) cells.push_back(row[k]);
      r.visits.push_back(std::move(cells));
    }
    out.subjects.push_back(std::move(r));
  }
  return out;
}

/// The same panel on a coarser visit schedule.
inline PanelDataset resample(const PanelDataset& ds, int cadence_months) {
  if (cadence_months % ds.cadence_months != 0)
    throw ContractError("cannot resample " + std::to_string(ds.cadence_months) + "-month data to " +
                        std::to_string(cadence_months) + " months");
  CadenceView view(ds.cadence_months, cadence_months, ds.visit_count);
  PanelDataset out{ds.schema, {}, cadence_months, view.model_visits()};
  for (const auto& s : ds.subjects) {
    SubjectRecord r{s.id, s.study, {}};
    for (int k = 0; k < out.visit_count; ++k) r.visits.push_back(s.visits[static_cast<std::size_t>(*view.data_slot(k))]);
    out.subjects.push_back(std::move(r));
  }
  return out;
}

/// Does lag-2 shingle extraction on `ds` produce any type-II shingles?
inline bool needs_imputer(const PanelDataset& ds) {
  auto sv = ShingleVariables::select(ds.schema, [](const VariableSpec& v) { return v.in_three_month(); });
  for (const auto& sh : extract_shingles(ds, 2, 3, sv))
    if (sh.kind == ShingleKind::type_two) return true;
  return false;
}

/// Train one component model on `ds` with encoding statistics from `ds`.
inline Model train_component(const PanelDataset& ds, ModelKind k, const TrainConfig& cfg,
                             const Model* imputer = nullptr, std::vector<EpochLog>* log = nullptr) {
  cfg.validate();
  auto enc = encode(ds, ds);
  auto layer = component_layer(ds.schema, k, cfg.hidden_units);
  TrainOptions opt;
  if (k == ModelKind::three_month) opt.imputer = imputer;
  auto res = train_crbm(enc, layer, cfg, opt);
  if (log) *log = res.log;
  return {layer, enc.stats.subset(layer.variables), res.params};
}

/// Imputer for `ds`, or nothing when it has no type-II shingles.
inline std::optional<Model> maybe_train_imputer(const PanelDataset& ds, std::uint64_t seed) {
  if (!needs_imputer(ds)) return std::nullopt;
  return train_imputer(encode(ds, ds), seed);
}

}  // namespace crbm
