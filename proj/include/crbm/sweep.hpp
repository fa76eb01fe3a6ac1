#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "crbm/csv.hpp"
#include "crbm/errors.hpp"
#include "crbm/evaluation.hpp"
#include "crbm/pipeline.hpp"
#include "crbm/training.hpp"

namespace crbm {

// ---- grid -------------------------------------------------------------------

struct GridAxis {
  std::string name;
  std::vector<double> values;
  friend bool operator==(const GridAxis&, const GridAxis&) = default;
};

struct GridSpec {
  std::vector<GridAxis> axes;

  void validate() const {
    if (axes.empty()) throw ContractError("grid has no axes");
    for (const auto& a : axes) {
      if (a.values.empty()) throw ContractError("grid axis '" + a.name + "' is empty");
      apply(TrainConfig{}, a.name, a.values.front());
    }
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
  }

  /// Values of grid point `i`; the last axis varies fastest, so point order
  /// is lexicographic in axis order.
  std::vector<double> point(std::size_t i) const {
    std::vector<double> out(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      out[a] = axes[a].values[i % axes[a].values.size()];
      i /= axes[a].values.size();
    }
    return out;
  }

  static TrainConfig apply(TrainConfig c, const std::string& name, double x) {
    auto as_int = [&] {
      if (x != std::floor(x)) throw ContractError("grid axis '" + name + "' needs integer values");
      return static_cast<int>(x);
    };
    if (name == "batch_size") c.batch_size = as_int();
    else if (name == "epochs") c.epochs = as_int();
    else if (name == "learning_rate") c.learning_rate = x;
    else if (name == "beta_std") c.beta_std = x;
    else if (name == "weight_penalty") c.weight_penalty = x;
    else if (name == "mc_steps") c.mc_steps = as_int();
    else if (name == "adversary_weight") c.adversary_weight = x;
    else if (name == "hidden_units") c.hidden_units = as_int();
    else throw ContractError("unknown grid axis '" + name + "'");
    return c;
  }

  TrainConfig config(const TrainConfig& base, std::size_t i) const {
    auto p = point(i);
    TrainConfig c = base;
    for (std::size_t a = 0; a < axes.size(); ++a) c = apply(c, axes[a].name, p[a]);
    return c;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline nlohmann::json to_json(const GridSpec& g) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& a : g.axes) j.push_back({{"name", a.name}, {"values", a.values}});
  return j;
}

/// Accepts `[{"name":..,"values":[..]},..]` or an object of axis -> values
/// (object keys are taken in document order).
inline GridSpec grid_from_json(const nlohmann::ordered_json& j) {
  GridSpec g;
  if (j.is_array()) {
    for (const auto& a : j) g.axes.push_back({a.at("name").get<std::string>(), a.at("values").get<std::vector<double>>()});
  } else {
    for (auto it = j.begin(); it != j.end(); ++it) g.axes.push_back({it.key(), it->get<std::vector<double>>()});
  }
  g.validate();
  return g;
}

// ---- metric table -------------------------------------------------------------

struct MetricColumn {
  std::string name;
  bool performance = false;    // statistical otherwise
  bool higher_better = true;   // R² higher, RMS lower
  friend bool operator==(const MetricColumn&, const MetricColumn&) = default;
};

struct MetricRow {
  std::vector<double> key;     // hyperparameter values, for tie breaks
  std::vector<double> values;
};

struct MetricTable {
  std::vector<MetricColumn> columns;
  std::vector<MetricRow> rows;

  void validate() const {
    for (const auto& r : rows) {
      if (r.values.size() != columns.size()) throw MetricError("metric row width differs from the column count");
      for (double x : r.values)
        if (!std::isfinite(x)) throw MetricError("metric table has a missing or non-finite cell");
    }
  }
};

struct Selection {
  std::size_t row = 0;
  std::vector<int> stage1_scores;       // per row
  std::vector<std::size_t> survivors;   // row indices after stage 1
  std::vector<int> stage2_scores;       // per survivor
  bool tie_broken = false;              // final choice needed the key order
};

namespace detail {

/// Competition ranks (1 = best, ties share the minimum) of `rows` on column c.
inline std::vector<int> competition_ranks(const MetricTable& t, const std::vector<std::size_t>& rows, std::size_t c) {
  std::vector<int> r(rows.size(), 1);
  const bool hi = t.columns[c].higher_better;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) {
      double a = t.rows[rows[j]].values[c], b = t.rows[rows[i]].values[c];
      if (hi ? a > b : a < b) ++r[i];
    }
  return r;
}

inline std::vector<int> worst_ranks(const MetricTable& t, const std::vector<std::size_t>& rows,
                                    const std::vector<std::size_t>& cols) {
  std::vector<int> score(rows.size(), 0);
  for (auto c : cols) {
    auto r = competition_ranks(t, rows, c);
    for (std::size_t i = 0; i < rows.size(); ++i) score[i] = std::max(score[i], r[i]);
  }
  return score;
}

/// Order of `rows` by (score, key).
inline std::vector<std::size_t> order_by_score(const MetricTable& t, const std::vector<std::size_t>& rows,
                                               const std::vector<int>& score) {
  std::vector<std::size_t> pos(rows.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  std::stable_sort(pos.begin(), pos.end(), [&](auto a, auto b) {
    if (score[a] != score[b]) return score[a] < score[b];
    return t.rows[rows[a]].key < t.rows[rows[b]].key;
  });
  return pos;
}

}  // namespace detail

/// Two-step minimax: score every row by its worst competition rank over all
/// metrics, keep the ceil(n/4) best, re-score the survivors on performance
/// metrics only and return the best. Ties go to the smaller key.
inline Selection minimax_select(const MetricTable& t) {
  if (t.rows.empty()) throw MetricError("cannot select from an empty metric table");
  if (t.columns.empty()) throw MetricError("metric table has no columns");
  t.validate();
  Selection sel;
  std::vector<std::size_t> all(t.rows.size()), cols(t.columns.size()), perf;
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    cols[c] = c;
    if (t.columns[c].performance) perf.push_back(c);
  }
  sel.stage1_scores = detail::worst_ranks(t, all, cols);
  auto order = detail::order_by_score(t, all, sel.stage1_scores);
  const std::size_t keep = (t.rows.size() + 3) / 4;
  for (std::size_t i = 0; i < keep; ++i) sel.survivors.push_back(order[i]);
  std::sort(sel.survivors.begin(), sel.survivors.end());
  sel.stage2_scores = detail::worst_ranks(t, sel.survivors, perf.empty() ? cols : perf);
  auto order2 = detail::order_by_score(t, sel.survivors, sel.stage2_scores);
  sel.row = sel.survivors[order2[0]];
  sel.tie_broken = order2.size() > 1 && sel.stage2_scores[order2[0]] == sel.stage2_scores[order2[1]];
  return sel;
}

// ---- selection metrics -------------------------------------------------------------

inline std::vector<MetricColumn> selection_columns(ModelKind k) {
  std::vector<MetricColumn> c;
  const int cad = model_cadence(k);
  const int lags = k == ModelKind::three_month ? 3 : 2;
  c.push_back({"R2 correlations", false, true});
  for (int l = 1; l <= lags; ++l) c.push_back({"R2 " + std::to_string(l * cad) + "-month autocorrelations", false, true});
  std::vector<std::string> endpoints{"ADAS-Cog11"};
  if (k == ModelKind::six_month) endpoints.push_back("CDR-SB");
  for (const auto& e : endpoints)
    for (int m : {6, 12, 18}) c.push_back({"RMS " + e + " progression at " + std::to_string(m) + " months", true, false});
  return c;
}

struct MetricRowResult {
  std::vector<double> values;
  std::vector<std::string> warnings;
};

/// Root-mean-square over subjects of (observed change − twin change) in an
/// endpoint at `month`, over subjects observed at baseline and `month`.
inline double progression_rms(const PanelDataset& data, const PanelDataset& twins, const CompositeEndpoint& e,
                              int month) {
  double ss = 0, n = 0;
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    auto d = detail::scores_by_month(data.subjects[i], data.cadence_months, data.schema, e);
    auto t = detail::scores_by_month(twins.subjects[i], twins.cadence_months, twins.schema, e);
    if (!d.count(0) || !d.count(month) || !t.count(0) || !t.count(month)) continue;
    double r = (d[month] - d[0]) - (t[month] - t[0]);
    ss += r * r;
    n += 1;
  }
  if (n == 0) throw MetricError(e.name + " has no observed change at month " + std::to_string(month));
  return std::sqrt(ss / n);
}

/// Metric row of one component model on validation data, from a
/// one-twin-per-subject cohort generated by that model alone.
inline MetricRowResult selection_metrics(const Model& m, const PanelDataset& val, ModelKind k,
                                         const EndpointSet& endpoints, std::uint64_t seed, int mc_steps = 25) {
  if (val.subjects.empty()) throw MetricError("validation set is empty");
  std::vector<std::string> needed{"ADAS-Cog11"};
  if (k == ModelKind::six_month) needed.push_back("CDR-SB");
  EndpointSet used;
  for (const auto& name : needed) {
    const auto& e = find_endpoint(endpoints, name);
    for (const auto& c : e.components)
      if (!find_variable(m.layer.variables, c))
        throw MetricError("endpoint '" + name + "' component '" + c + "' is not modeled by the " + to_string(k) +
                          " model");
    used.push_back(e);
  }
  PanelDataset data = project(val, m.layer.variables);
  if (data.cadence_months != m.layer.cadence_months) data = resample(data, m.layer.cadence_months);
  PanelDataset twins = data;
  twins.subjects = single_model_twins(m, data, seed, mc_steps);

  MetricRowResult out;
  auto rep = moment_report(data, twins, k == ModelKind::three_month ? 3 : 2);
  for (std::size_t f = 2; f < rep.families.size(); ++f) {
    const auto& fam = rep.families[f];
    if (fam.excluded > 0)
      out.warnings.push_back(fam.name + ": " + std::to_string(fam.excluded) + " undefined cell(s) excluded");
    if (std::isfinite(fam.r2)) {
      out.values.push_back(fam.r2);
    } else {
      out.warnings.push_back(fam.name + ": R2 undefined, scored as 0");
      out.values.push_back(0.0);
    }
  }
  for (const auto& e : used)
    for (int month : {6, 12, 18}) out.values.push_back(progression_rms(data, twins, e, month));
  return out;
}

// ---- sweep ------------------------------------------------------------------------

struct SweepOptions {
  ModelKind kind = ModelKind::three_month;
  TrainConfig base;
  EndpointSet endpoints;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  int mc_steps = 25;               // generation steps when scoring
  const Model* imputer = nullptr;
};

struct SweepRow {
  std::size_t index = 0;
  TrainConfig config;
  std::vector<double> key;
  bool ok = false;
  std::string error;
  std::vector<double> values;
  std::vector<std::string> warnings;
};

struct SweepResult {
  GridSpec grid;
  std::vector<MetricColumn> columns;
  std::vector<SweepRow> rows;
  MetricTable table;                     // successful rows only
  std::vector<std::size_t> table_rows;   // sweep row of each table row
  Selection selection;
  std::size_t selected = 0;              // sweep row index
  TrainConfig selected_config;
  Model model;                           // retrained on train ∪ validation
  std::vector<std::string> warnings;
};

inline std::uint64_t sweep_row_seed(std::uint64_t seed, std::size_t i) {
  return stream_key(seed, {0x5eedULL, static_cast<std::uint64_t>(i)});
}

/// Train every grid point on `train`, score it on `val`, select by minimax
/// and retrain the winner on train ∪ val. Rows are independent; `workers`
/// threads share them and the table is assembled in grid order.
inline SweepResult run_sweep(const GridSpec& grid, const PanelDataset& train, const PanelDataset& val,
                             const SweepOptions& opt) {
  grid.validate();
  validate_dataset(train);
  validate_dataset(val);
  SweepResult res;
  res.grid = grid;
  res.columns = selection_columns(opt.kind);
  const std::size_t n = grid.size();
  res.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = res.rows[i];
    r.index = i;
    r.key = grid.point(i);
    r.config = grid.config(opt.base, i);
    r.config.seed = sweep_row_seed(opt.seed, i);
  }
  auto run_row = [&](SweepRow& r) {
    try {
      auto m = train_component(train, opt.kind, r.config, opt.imputer);
      auto metrics = selection_metrics(m, val, opt.kind, opt.endpoints, r.config.seed, opt.mc_steps);
      for (double x : metrics.values)
        if (!std::isfinite(x)) throw MetricError("non-finite selection metric");
      r.values = std::move(metrics.values);
      r.warnings = std::move(metrics.warnings);
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.error = e.what();
    }
  };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) run_row(res.rows[i]);
  };
  const unsigned w = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n)));
  if (w == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  res.table.columns = res.columns;
  for (const auto& r : res.rows) {
    if (!r.ok) {
      res.warnings.push_back("grid point " + std::to_string(r.index) + " failed and was excluded: " + r.error);
      continue;
    }
    res.table.rows.push_back({r.key, r.values});
    res.table_rows.push_back(r.index);
  }
  if (res.table.rows.empty()) throw MetricError("every grid point failed");
  res.selection = minimax_select(res.table);
  res.selected = res.table_rows[res.selection.row];
  res.selected_config = res.rows[res.selected].config;
  if (res.selection.tie_broken) res.warnings.push_back("final selection tie broken by hyperparameter order");
  res.model = train_component(merge_datasets(train, val), opt.kind, res.selected_config, opt.imputer);
  return res;
}

inline void write_metric_table(const SweepResult& r, std::ostream& out) {
  out << "row,status";
  for (const auto& a : r.grid.axes) out << ',' << a.name;
  out << ",seed";
  for (const auto& c : r.columns) out << ',' << c.name;
  out << ",selected\n";
  for (const auto& row : r.rows) {
    out << row.index << ',' << (row.ok ? "ok" : "failed");
    for (double x : row.key) out << ',' << csv::number(x);
    out << ',' << row.config.seed;
    for (std::size_t c = 0; c < r.columns.size(); ++c) out << ',' << (row.ok ? csv::number(row.values[c]) : "");
    out << ',' << (row.index == r.selected ? 1 : 0) << '\n';
  }
}

// ---- report -------------------------------------------------------------------

struct MetricSummary {
  MetricColumn column;
  std::vector<double> edges;   // bins + 1
  std::vector<int> counts;
  double selected = 0.0;
  std::size_t selected_bin = 0;
  double min = 0.0, median = 0.0, max = 0.0;
};

/// Histogram per metric with the selected row's value.
inline std::vector<MetricSummary> sweep_report(const MetricTable& t, std::size_t selected_row, int bins = 20) {
  if (t.rows.empty()) throw MetricError("cannot summarize an empty metric table");
  if (selected_row >= t.rows.size()) throw ContractError("selected row out of range");
  std::vector<MetricSummary> out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    MetricSummary s;
    s.column = t.columns[c];
    std::vector<double> x;
    for (const auto& r : t.rows) x.push_back(r.values[c]);
    s.selected = x[selected_row];
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    s.median = stats::median(x);
    double lo = s.min, hi = s.max;
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    for (int b = 0; b <= bins; ++b) s.edges.push_back(lo + (hi - lo) * b / bins);
    s.counts.assign(static_cast<std::size_t>(bins), 0);
    auto bin = [&](double v) {
      return static_cast<std::size_t>(std::clamp(static_cast<int>((v - lo) / (hi - lo) * bins), 0, bins - 1));
    };
    for (double v : x) ++s.counts[bin(v)];
    s.selected_bin = bin(s.selected);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_sweep_report(const std::vector<MetricSummary>& rep, std::ostream& out) {
  out << "metric,kind,better,bin_low,bin_high,count,selected_value,selected_in_bin\n";
  for (const auto& s : rep)
    for (std::size_t b = 0; b < s.counts.size(); ++b) {
      bool in = b == s.selected_bin;
      out << '"' << s.column.name << '"' << ',' << (s.column.performance ? "performance" : "statistical") << ','
          << (s.column.higher_better ? "higher" : "lower") << ',' << csv::number(s.edges[b]) << ','
          << csv::number(s.edges[b + 1]) << ',' << s.counts[b] << ',' << csv::number(s.selected) << ','
          << (in ? 1 : 0) << '\n';
    }
}

}  // namespace crbm
