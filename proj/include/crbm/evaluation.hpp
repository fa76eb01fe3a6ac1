#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "crbm/composite.hpp"
#include "crbm/csv.hpp"
#include "crbm/errors.hpp"
#include "crbm/panel.hpp"
#include "crbm/random.hpp"
#include "crbm/schema.hpp"
#include "crbm/stats.hpp"

namespace crbm {

// ---- composite endpoints ----------------------------------------------------

struct CompositeEndpoint {
  std::string name;
  std::vector<std::string> components;
};

using EndpointSet = std::vector<CompositeEndpoint>;

/// ADAS-Cog11 (the 13 modeled items minus delayed word recall and
/// cancellation), CDR Sum-of-Boxes and MMSE, as sums of their components.
inline EndpointSet standard_endpoints() {
  return {{"ADAS-Cog11",
           {"adas_commands", "adas_comprehension", "adas_construction", "adas_ideational", "adas_naming",
            "adas_orientation", "adas_remember_instructions", "adas_spoken_language", "adas_word_finding",
            "adas_word_recall", "adas_word_recognition"}},
          {"CDR-SB",
           {"cdr_community", "cdr_home_hobbies", "cdr_judgement", "cdr_memory", "cdr_orientation",
            "cdr_personal_care"}},
          {"MMSE", {"mmse_attention", "mmse_language", "mmse_orientation", "mmse_recall", "mmse_registration"}}};
}

inline const CompositeEndpoint& find_endpoint(const EndpointSet& set, const std::string& name) {
  for (const auto& e : set)
    if (e.name == name) return e;
  throw MetricError("unknown endpoint '" + name + "'");
}

inline void validate_endpoints(const EndpointSet& set, const Schema& schema) {
  for (const auto& e : set) {
    if (e.components.empty()) throw MetricError("endpoint '" + e.name + "' has no components");
    for (const auto& c : e.components)
      if (!find_variable(schema, c))
        throw MetricError("endpoint '" + e.name + "' component '" + c + "' is not in the schema");
  }
}

inline nlohmann::json to_json(const EndpointSet& set) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : set) j[e.name] = e.components;
  return j;
}

inline EndpointSet endpoints_from_json(const nlohmann::json& j) {
  EndpointSet set;
  for (auto it = j.begin(); it != j.end(); ++it)
    set.push_back({it.key(), it->get<std::vector<std::string>>()});
  return set;
}

/// Per-visit sum of the components; missing when any component is.
inline std::vector<Cell> composite_scores(const SubjectRecord& r, const Schema& schema, const CompositeEndpoint& e) {
  std::vector<std::size_t> idx;
  for (const auto& c : e.components) {
    auto k = find_variable(schema, c);
    if (!k) throw MetricError("endpoint '" + e.name + "' component '" + c + "' is not in the schema");
    idx.push_back(*k);
  }
  std::vector<Cell> out(r.visits.size());
  for (std::size_t t = 0; t < r.visits.size(); ++t) {
    double s = 0;
    bool ok = true;
    for (auto k : idx) {
      if (!r.visits[t][k]) {
        ok = false;
        break;
      }
      s += *r.visits[t][k];
    }
    if (ok) out[t] = s;
  }
  return out;
}

// ---- alignment ----------------------------------------------------------------

/// Value of variable `v` at `month` in a record laid out at `cadence`.
inline Cell value_at(const SubjectRecord& r, int cadence, std::size_t v, int month) {
  if (month % cadence != 0) return std::nullopt;
  auto t = static_cast<std::size_t>(month / cadence);
  if (t >= r.visits.size()) return std::nullopt;
  return r.visits[t][v];
}

/// Test data paired with twin sets (twins[i] belongs to data.subjects[i]).
struct TwinComparison {
  const PanelDataset& data;
  const std::vector<TwinSet>& twins;
  int twin_cadence = 3;

  TwinComparison(const PanelDataset& d, const std::vector<TwinSet>& t, int cad = 3)
      : data(d), twins(t), twin_cadence(cad) {
    if (twins.size() != data.subjects.size()) throw ContractError("one twin set per test subject is required");
    for (std::size_t i = 0; i < twins.size(); ++i) {
      if (twins[i].source_subject_id != data.subjects[i].id)
        throw ContractError("twin set " + std::to_string(i) + " belongs to '" + twins[i].source_subject_id +
                            "', expected '" + data.subjects[i].id + "'");
      if (twins[i].twins.empty()) throw ContractError("empty twin set for '" + twins[i].source_subject_id + "'");
    }
  }

  std::size_t twin_count() const {
    std::size_t n = std::numeric_limits<std::size_t>::max();
    for (const auto& t : twins) n = std::min(n, t.twins.size());
    return n;
  }

  /// Follow-up visit months of the data.
  std::vector<int> follow_up_months() const {
    std::vector<int> m;
    for (int t = 1; t < data.visit_count; ++t) m.push_back(t * data.cadence_months);
    return m;
  }

  Cell data_value(std::size_t s, std::size_t v, int month) const {
    return value_at(data.subjects[s], data.cadence_months, v, month);
  }
  Cell twin_value(std::size_t s, std::size_t k, std::size_t v, int month) const {
    return value_at(twins[s].twins[k], twin_cadence, v, month);
  }
};

/// Longitudinal variables with an ordering (everything but categorical).
inline std::vector<std::size_t> ordered_longitudinal(const Schema& schema) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < schema.size(); ++v)
    if (schema[v].longitudinal() && schema[v].domain != Domain::categorical) out.push_back(v);
  return out;
}

// ---- calibration --------------------------------------------------------------

/// φ = Φ⁻¹(p) with p the midpoint empirical CDF of `observed` among the
/// twins (ties count one half), clipped to [1/(2n), 1 - 1/(2n)].
inline double phi_statistic(const std::vector<double>& twins, double observed) {
  if (twins.size() < 2) throw ContractError("φ needs at least two twin values");
  const double n = static_cast<double>(twins.size());
  double less = 0, equal = 0;
  for (double x : twins) {
    if (x < observed) less += 1;
    else if (x == observed) equal += 1;
  }
  double p = (less + 0.5 * equal) / n;
  p = std::clamp(p, 1.0 / (2 * n), 1.0 - 1.0 / (2 * n));
  return stats::normal_quantile(p);
}

inline double bonferroni_threshold(std::size_t variables, std::size_t visits, double alpha = 0.05) {
  if (variables == 0 || visits == 0) throw ContractError("empty comparison grid");
  return alpha / static_cast<double>(variables * visits);
}

struct CalibrationCell {
  std::string variable;
  int month = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  bool flagged = false;
  std::size_t n = 0;
};

struct CalibrationReport {
  std::vector<CalibrationCell> cells;
  double threshold = 0.0;
  std::vector<std::string> notes;

  std::size_t flagged() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.flagged; }));
  }
};

inline constexpr std::size_t kMinCellSubjects = 5;

/// φ means and sds per (variable, follow-up visit); Normal(mean, sd²) is
/// compared to N(0,1) by the KS distance at n = subject count and flagged
/// at 0.05 / (variables · visits).
inline CalibrationReport calibration_report(const TwinComparison& cmp, std::vector<std::size_t> variables = {}) {
  if (variables.empty()) variables = ordered_longitudinal(cmp.data.schema);
  auto months = cmp.follow_up_months();
  CalibrationReport rep;
  rep.threshold = bonferroni_threshold(variables.size(), months.size());
  const std::size_t K = cmp.twin_count();
  std::vector<double> tw;
  for (auto v : variables)
    for (int month : months) {
      std::vector<double> phis;
      for (std::size_t s = 0; s < cmp.data.subjects.size(); ++s) {
        auto obs = cmp.data_value(s, v, month);
        if (!obs) continue;
        tw.clear();
        for (std::size_t k = 0; k < K; ++k)
          if (auto x = cmp.twin_value(s, k, v, month)) tw.push_back(*x);
        if (tw.size() < 2) continue;
        phis.push_back(phi_statistic(tw, *obs));
      }
      const auto& name = cmp.data.schema[v].name;
      if (phis.size() < kMinCellSubjects) {
        rep.notes.push_back(name + " at month " + std::to_string(month) + ": " + std::to_string(phis.size()) +
                            " subject(s), cell excluded");
        continue;
      }
      CalibrationCell c;
      c.variable = name;
      c.month = month;
      c.n = phis.size();
      c.mean = stats::mean(phis);
      c.sd = stats::sd(phis);
      c.ks_statistic = stats::normal_cdf_distance(c.mean, c.sd);
      c.ks_pvalue = stats::ks_pvalue(c.ks_statistic, c.n);
      c.flagged = c.ks_pvalue < rep.threshold;
      rep.cells.push_back(c);
    }
  return rep;
}

// ---- moments ------------------------------------------------------------------

struct MomentPoint {
  std::string label;
  double data = 0.0;
  double model = 0.0;
  double weight = 0.0;  // fraction of data present
};

struct MomentFamily {
  std::string name;     // mean, sd, corr, lag1, lag2, lag3
  std::string method;   // theil-sen or least-squares
  std::vector<MomentPoint> points;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  std::size_t excluded = 0;  // zero-variance or too-small cells
};

struct MomentReport {
  std::vector<MomentFamily> families;

  const MomentFamily& family(const std::string& name) const {
    for (const auto& f : families)
      if (f.name == name) return f;
    throw MetricError("no moment family '" + name + "'");
  }
};

namespace detail {

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 3) return std::nullopt;
  double ma = stats::mean(a), mb = stats::mean(b), sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

/// Regression of data (y) on model (x).
inline void fit_family(MomentFamily& f, bool robust) {
  std::vector<double> x, y, w;
  for (const auto& p : f.points) {
    x.push_back(p.model);
    y.push_back(p.data);
    w.push_back(p.weight);
  }
  if (x.size() < 2) return;
  try {
    if (robust) {
      auto fit = stats::theil_sen(x, y, w);
      f.slope = fit.slope;
      f.intercept = fit.intercept;
    } else {
      auto fit = stats::least_squares(x, y, w);
      f.slope = fit.slope;
      f.intercept = fit.intercept;
      f.r2 = fit.r2;
    }
  } catch (const FitError&) {
  }
}

}  // namespace detail

/// Means and sds per (variable, follow-up visit), equal-time correlations
/// and lag-1..3 autocorrelations over all follow-up visits, data against a
/// one-twin-per-subject cohort. Twin statistics use the subjects whose data
/// are present in that cell.
inline MomentReport moment_report(const PanelDataset& data, const PanelDataset& twins, int max_lag = 3) {
  if (twins.subjects.size() != data.subjects.size()) throw ContractError("twin cohort must pair every test subject");
  const auto vars = ordered_longitudinal(data.schema);
  const auto N = data.subjects.size();
  const int T = data.visit_count;
  auto dval = [&](std::size_t s, std::size_t v, int t) { return data.subjects[s].visits[static_cast<std::size_t>(t)][v]; };
  auto tval = [&](std::size_t s, std::size_t v, int t) {
    return value_at(twins.subjects[s], twins.cadence_months, v, t * data.cadence_months);
  };
  MomentReport rep;
  MomentFamily mean{"mean", "theil-sen", {}}, sd{"sd", "theil-sen", {}};
  for (auto v : vars)
    for (int t = 1; t < T; ++t) {
      std::vector<double> a, b;
      for (std::size_t s = 0; s < N; ++s) {
        auto x = dval(s, v, t);
        auto y = tval(s, v, t);
        if (!x || !y) continue;
        a.push_back(*x);
        b.push_back(*y);
      }
      std::string label = data.schema[v].name + "@" + std::to_string(t * data.cadence_months);
      if (a.size() < 2) {
        ++mean.excluded;
        ++sd.excluded;
        continue;
      }
      double w = static_cast<double>(a.size()) / static_cast<double>(N);
      mean.points.push_back({label, stats::mean(a), stats::mean(b), w});
      sd.points.push_back({label, stats::sd(a), stats::sd(b), w});
    }
  detail::fit_family(mean, true);
  detail::fit_family(sd, true);
  rep.families.push_back(std::move(mean));
  rep.families.push_back(std::move(sd));
  for (int lag = 0; lag <= max_lag; ++lag) {
    MomentFamily f{lag == 0 ? "corr" : "lag" + std::to_string(lag), "least-squares", {}};
    for (std::size_t i = 0; i < vars.size(); ++i)
      for (std::size_t j = lag == 0 ? i + 1 : 0; j < vars.size(); ++j)
        for (int t = 1; t + lag < T; ++t) {
          std::vector<double> a1, a2, b1, b2;
          for (std::size_t s = 0; s < N; ++s) {
            auto x1 = dval(s, vars[i], t), x2 = dval(s, vars[j], t + lag);
            auto y1 = tval(s, vars[i], t), y2 = tval(s, vars[j], t + lag);
            if (!x1 || !x2 || !y1 || !y2) continue;
            a1.push_back(*x1);
            a2.push_back(*x2);
            b1.push_back(*y1);
            b2.push_back(*y2);
          }
          auto cd = detail::pearson(a1, a2), cm = detail::pearson(b1, b2);
          if (!cd || !cm) {
            ++f.excluded;
            continue;
          }
          f.points.push_back({data.schema[vars[i]].name + "~" + data.schema[vars[j]].name + "@" +
                                  std::to_string(t * data.cadence_months),
                              *cd, *cm, static_cast<double>(a1.size()) / static_cast<double>(N)});
        }
    detail::fit_family(f, false);
    rep.families.push_back(std::move(f));
  }
  return rep;
}

// ---- discriminator ------------------------------------------------------------

struct DiscriminatorCell {
  std::string features;  // levels or differences
  int month = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t trials = 0;
};

struct DiscriminatorReport {
  std::vector<DiscriminatorCell> cells;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> coefficients;  // per feature, pooled over trials, visits and folds
};

struct DiscriminatorOptions {
  std::size_t trials = 100;
  int folds = 5;
  double ridge = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

/// k-fold CV accuracy of a ridge logistic regression on standardized
/// features; rows 2i (data) and 2i+1 (twin) share a fold. Coefficients of
/// every fold fit are appended to `coef` when given.
inline double paired_cv_accuracy(const Eigen::MatrixXd& X, int folds, double ridge, Rng& rng,
                                 std::vector<std::vector<double>>* coef) {
  const auto pairs = static_cast<std::size_t>(X.rows() / 2);
  std::vector<std::size_t> order(pairs);
  for (std::size_t i = 0; i < pairs; ++i) order[i] = i;
  shuffle(order, rng);
  std::vector<int> fold(pairs);
  for (std::size_t i = 0; i < pairs; ++i) fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  double correct = 0, total = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (std::size_t i = 0; i < pairs; ++i)
      for (Eigen::Index r : {static_cast<Eigen::Index>(2 * i), static_cast<Eigen::Index>(2 * i + 1)})
        (fold[i] == f ? te : tr).push_back(r);
    Eigen::MatrixXd Xtr = X(tr, Eigen::all), Xte = X(te, Eigen::all);
    Eigen::VectorXd mu = Xtr.colwise().mean();
    Eigen::VectorXd sd = ((Xtr.rowwise() - mu.transpose()).array().square().colwise().sum() /
                          std::max<double>(1.0, static_cast<double>(Xtr.rows() - 1)))
                             .sqrt();
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (sd[c] > 1e-12) {
        Xtr.col(c) = (Xtr.col(c).array() - mu[c]) / sd[c];
        Xte.col(c) = (Xte.col(c).array() - mu[c]) / sd[c];
      } else {
        Xtr.col(c).setZero();
        Xte.col(c).setZero();
      }
    }
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(tr.size()));
    for (std::size_t i = 0; i < tr.size(); ++i) ytr[static_cast<Eigen::Index>(i)] = tr[i] % 2 == 0 ? 1.0 : 0.0;
    auto model = stats::fit_logistic(Xtr, ytr, ridge);
    Eigen::VectorXd p = model.predict(Xte);
    for (std::size_t i = 0; i < te.size(); ++i) {
      bool truth = te[i] % 2 == 0;
      correct += (p[static_cast<Eigen::Index>(i)] >= 0.5) == truth;
      total += 1;
    }
    if (coef)
      for (Eigen::Index c = 0; c < X.cols(); ++c) (*coef)[static_cast<std::size_t>(c)].push_back(model.coefficients[c]);
  }
  return correct / total;
}

}  // namespace detail

/// Per follow-up visit, CV accuracy of a logistic regression telling each
/// subject from one of its twins (levels and consecutive differences),
/// averaged over twin indices. Data-side missing cells are mean-imputed and
/// the same value is written into the twin row.
inline DiscriminatorReport discriminator_probe(const TwinComparison& cmp, const DiscriminatorOptions& opt = {}) {
  const auto& data = cmp.data;
  const auto N = data.subjects.size();
  if (N / static_cast<std::size_t>(opt.folds) < 10)
    throw MetricError("discriminator needs at least 10 subjects per fold (have " + std::to_string(N) + " subjects for " +
                      std::to_string(opt.folds) + " folds)");
  const std::size_t trials = std::min(opt.trials, cmp.twin_count());
  const auto vars = ordered_longitudinal(data.schema);
  const auto F = static_cast<Eigen::Index>(vars.size());
  auto months = cmp.follow_up_months();
  std::vector<int> all_months{0};
  all_months.insert(all_months.end(), months.begin(), months.end());

  // Column means of observed data per (visit, variable).
  std::map<int, std::vector<double>> fill;
  for (int month : all_months) {
    auto& m = fill[month];
    for (auto v : vars) {
      double s = 0, n = 0;
      for (std::size_t i = 0; i < N; ++i)
        if (auto x = cmp.data_value(i, v, month)) {
          s += *x;
          n += 1;
        }
      m.push_back(n > 0 ? s / n : 0.0);
    }
  }
  auto features = [&](std::size_t k, int month) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(2 * N), F);
    for (std::size_t i = 0; i < N; ++i)
      for (Eigen::Index f = 0; f < F; ++f) {
        auto v = vars[static_cast<std::size_t>(f)];
        auto d = cmp.data_value(i, v, month);
        double imputed = fill[month][static_cast<std::size_t>(f)];
        X(static_cast<Eigen::Index>(2 * i), f) = d ? *d : imputed;
        auto tv = cmp.twin_value(i, k, v, month);
        X(static_cast<Eigen::Index>(2 * i + 1), f) = d ? (tv ? *tv : imputed) : imputed;
      }
    return X;
  };

  DiscriminatorReport rep;
  for (auto v : vars) rep.feature_names.push_back(data.schema[v].name);
  rep.coefficients.assign(vars.size(), {});
  for (int set = 0; set < 2; ++set)
    for (std::size_t mi = 0; mi < months.size(); ++mi) {
      int month = months[mi];
      std::vector<double> acc;
      for (std::size_t k = 0; k < trials; ++k) {
        Eigen::MatrixXd X = features(k, month);
        if (set == 1) X -= features(k, all_months[mi]);
        Rng rng(opt.seed, {0xd15cULL, static_cast<std::uint64_t>(set), static_cast<std::uint64_t>(month), k});
        acc.push_back(detail::paired_cv_accuracy(X, opt.folds, opt.ridge, rng, set == 0 ? &rep.coefficients : nullptr));
      }
      DiscriminatorCell c;
      c.features = set == 0 ? "levels" : "differences";
      c.month = month;
      c.trials = acc.size();
      c.accuracy = stats::mean(acc);
      double half = acc.size() > 1 ? 1.96 * stats::sd(acc) / std::sqrt(static_cast<double>(acc.size())) : 0.0;
      c.ci_low = c.accuracy - half;
      c.ci_high = c.accuracy + half;
      rep.cells.push_back(c);
    }
  return rep;
}

// ---- endpoint progression -----------------------------------------------------

struct ProgressionPoint {
  std::string endpoint;
  std::string stratum;
  int month = 0;
  double data_mean = 0.0;
  double data_se = 0.0;
  std::size_t data_n = 0;
  double model_mean = 0.0;
  double model_se = 0.0;
  std::size_t model_n = 0;
};

struct ProgressionReport {
  std::vector<ProgressionPoint> points;
  std::vector<std::string> notes;
};

namespace detail {

inline double standard_error(const std::vector<double>& x) {
  return x.size() > 1 ? stats::sd(x) / std::sqrt(static_cast<double>(x.size())) : 0.0;
}

/// Per-visit scores of a record, indexed by month.
inline std::map<int, double> scores_by_month(const SubjectRecord& r, int cadence, const Schema& schema,
                                             const CompositeEndpoint& e) {
  std::map<int, double> out;
  auto s = composite_scores(r, schema, e);
  for (std::size_t t = 0; t < s.size(); ++t)
    if (s[t]) out[static_cast<int>(t) * cadence] = *s[t];
  return out;
}

}  // namespace detail

/// Mean change from baseline per endpoint, stratum and visit: data over
/// observed subjects, model as the mean over subjects of each subject's
/// twin-averaged change. Strata split subjects by baseline `stratify_by`
/// at the given cut points (x <= cut goes left).
inline ProgressionReport endpoint_progression(const TwinComparison& cmp, const EndpointSet& endpoints,
                                              const std::vector<double>& cuts = {},
                                              const std::string& stratify_by = "ADAS-Cog11") {
  const auto& data = cmp.data;
  validate_endpoints(endpoints, data.schema);
  const auto N = data.subjects.size();
  std::vector<int> stratum(N, 0);
  std::vector<std::string> names;
  if (cuts.empty()) {
    names.push_back("all");
  } else {
    const auto& se = find_endpoint(endpoints, stratify_by);
    for (std::size_t b = 0; b <= cuts.size(); ++b) {
      std::string lo = b == 0 ? "-inf" : csv::number(cuts[b - 1]);
      std::string hi = b == cuts.size() ? "inf" : csv::number(cuts[b]);
      names.push_back("(" + lo + "," + hi + "]");
    }
    for (std::size_t i = 0; i < N; ++i) {
      auto s = composite_scores(data.subjects[i], data.schema, se);
      if (s.empty() || !s[0]) {
        stratum[i] = -1;
        continue;
      }
      stratum[i] = static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), *s[0]) - cuts.begin());
    }
  }
  ProgressionReport rep;
  const std::size_t K = cmp.twin_count();
  std::vector<int> months{0};
  for (int m : cmp.follow_up_months()) months.push_back(m);
  for (const auto& e : endpoints) {
    std::vector<std::map<int, double>> dscore(N);
    std::vector<std::vector<std::map<int, double>>> tscore(N);
    for (std::size_t i = 0; i < N; ++i) {
      dscore[i] = detail::scores_by_month(data.subjects[i], data.cadence_months, data.schema, e);
      for (std::size_t k = 0; k < K; ++k)
        tscore[i].push_back(detail::scores_by_month(cmp.twins[i].twins[k], cmp.twin_cadence, data.schema, e));
    }
    for (std::size_t b = 0; b < names.size(); ++b) {
      bool any = false;
      for (std::size_t i = 0; i < N; ++i) any = any || stratum[i] == static_cast<int>(b);
      if (!any) {
        rep.notes.push_back(e.name + " stratum " + names[b] + " is empty; skipped");
        continue;
      }
      for (int month : months) {
        std::vector<double> dchg, mchg;
        for (std::size_t i = 0; i < N; ++i) {
          if (stratum[i] != static_cast<int>(b)) continue;
          auto d0 = dscore[i].find(0), dt = dscore[i].find(month);
          if (d0 != dscore[i].end() && dt != dscore[i].end()) dchg.push_back(dt->second - d0->second);
          double s = 0, n = 0;
          for (std::size_t k = 0; k < K; ++k) {
            auto t0 = tscore[i][k].find(0), tt = tscore[i][k].find(month);
            if (t0 == tscore[i][k].end() || tt == tscore[i][k].end()) continue;
            s += tt->second - t0->second;
            n += 1;
          }
          if (n > 0) mchg.push_back(s / n);
        }
        if (dchg.empty()) {
          rep.notes.push_back(e.name + " stratum " + names[b] + " month " + std::to_string(month) + ": no data");
          continue;
        }
        ProgressionPoint p{e.name, names[b], month, stats::mean(dchg), detail::standard_error(dchg), dchg.size(),
                           mchg.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(mchg),
                           detail::standard_error(mchg), mchg.size()};
        rep.points.push_back(p);
      }
    }
  }
  return rep;
}

/// Tertile cut points of baseline scores of an endpoint.
inline std::vector<double> tertile_cuts(const PanelDataset& data, const CompositeEndpoint& e) {
  std::vector<double> base;
  for (const auto& s : data.subjects) {
    auto sc = composite_scores(s, data.schema, e);
    if (!sc.empty() && sc[0]) base.push_back(*sc[0]);
  }
  if (base.size() < 3) return {};
  std::sort(base.begin(), base.end());
  auto q = [&](double f) {
    double pos = f * static_cast<double>(base.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, base.size() - 1);
    return base[lo] + (pos - static_cast<double>(lo)) * (base[hi] - base[lo]);
  };
  return {q(1.0 / 3.0), q(2.0 / 3.0)};
}

// ---- subject-level fit ----------------------------------------------------------

struct SubjectFit {
  std::string endpoint;
  int month = 0;
  stats::RegressionFit fit;
};

/// Observed change from baseline regressed on the twin-averaged predicted
/// change, over subjects observed at baseline and `month`.
inline SubjectFit subject_level_fit(const TwinComparison& cmp, const CompositeEndpoint& e, int month) {
  const auto& data = cmp.data;
  const std::size_t K = cmp.twin_count();
  std::vector<double> x, y;
  for (std::size_t i = 0; i < data.subjects.size(); ++i) {
    auto d = detail::scores_by_month(data.subjects[i], data.cadence_months, data.schema, e);
    if (!d.count(0) || !d.count(month)) continue;
    double s = 0, n = 0;
    for (std::size_t k = 0; k < K; ++k) {
      auto t = detail::scores_by_month(cmp.twins[i].twins[k], cmp.twin_cadence, data.schema, e);
      if (!t.count(0) || !t.count(month)) continue;
      s += t[month] - t[0];
      n += 1;
    }
    if (n == 0) continue;
    x.push_back(s / n);
    y.push_back(d[month] - d[0]);
  }
  if (x.size() < 10)
    throw MetricError(e.name + " at month " + std::to_string(month) + ": need at least 10 subjects, have " +
                      std::to_string(x.size()));
  return {e.name, month, stats::least_squares(x, y)};
}

// ---- marginal moment tests --------------------------------------------------------

struct MarginalCell {
  std::string variable;
  int month = 0;
  double data_mean = 0, model_mean = 0, data_sd = 0, model_sd = 0;
  double t_pvalue = 1.0;
  double levene_pvalue = 1.0;
  bool mean_flagged = false;
  bool sd_flagged = false;
  std::size_t n = 0;
};

struct MarginalReport {
  std::vector<MarginalCell> cells;
  double threshold = 0.0;
  std::vector<std::string> notes;
};

/// Per (variable, follow-up visit): Welch t-test of means and Levene test of
/// spreads between data and the twin cohort, Bonferroni over tested cells.
inline MarginalReport marginal_moment_tests(const PanelDataset& data, const PanelDataset& twins) {
  if (twins.subjects.size() != data.subjects.size()) throw ContractError("twin cohort must pair every test subject");
  MarginalReport rep;
  for (auto v : ordered_longitudinal(data.schema))
    for (int t = 1; t < data.visit_count; ++t) {
      int month = t * data.cadence_months;
      std::vector<double> a, b;
      for (std::size_t s = 0; s < data.subjects.size(); ++s) {
        auto x = data.subjects[s].visits[static_cast<std::size_t>(t)][v];
        auto y = value_at(twins.subjects[s], twins.cadence_months, v, month);
        if (!x || !y) continue;
        a.push_back(*x);
        b.push_back(*y);
      }
      if (a.size() < kMinCellSubjects) {
        rep.notes.push_back(data.schema[v].name + " at month " + std::to_string(month) + ": too few observations");
        continue;
      }
      MarginalCell c{data.schema[v].name, month, stats::mean(a), stats::mean(b), stats::sd(a), stats::sd(b),
                     stats::welch_t_test(a, b), stats::levene_test(a, b), false, false, a.size()};
      rep.cells.push_back(c);
    }
  if (!rep.cells.empty()) rep.threshold = 0.05 / static_cast<double>(rep.cells.size());
  for (auto& c : rep.cells) {
    c.mean_flagged = c.t_pvalue < rep.threshold;
    c.sd_flagged = c.levene_pvalue < rep.threshold;
  }
  return rep;
}

// ---- CSV output ---------------------------------------------------------------------

inline void write_csv(const CalibrationReport& r, std::ostream& out) {
  out << "variable,month,n,phi_mean,phi_sd,ks_statistic,ks_pvalue,threshold,flagged\n";
  for (const auto& c : r.cells)
    out << c.variable << ',' << c.month << ',' << c.n << ',' << csv::number(c.mean) << ',' << csv::number(c.sd) << ','
        << csv::number(c.ks_statistic) << ',' << csv::number(c.ks_pvalue) << ',' << csv::number(r.threshold) << ','
        << (c.flagged ? 1 : 0) << '\n';
}

inline void write_csv(const MomentReport& r, std::ostream& out) {
  out << "family,label,data,model,weight\n";
  for (const auto& f : r.families)
    for (const auto& p : f.points)
      out << f.name << ',' << p.label << ',' << csv::number(p.data) << ',' << csv::number(p.model) << ','
          << csv::number(p.weight) << '\n';
}

inline void write_fit_csv(const MomentReport& r, std::ostream& out) {
  out << "family,method,points,excluded,slope,intercept,r2\n";
  for (const auto& f : r.families)
    out << f.name << ',' << f.method << ',' << f.points.size() << ',' << f.excluded << ',' << csv::number(f.slope)
        << ',' << csv::number(f.intercept) << ',' << csv::number(f.r2) << '\n';
}

inline void write_csv(const DiscriminatorReport& r, std::ostream& out) {
  out << "features,month,trials,accuracy,ci_low,ci_high\n";
  for (const auto& c : r.cells)
    out << c.features << ',' << c.month << ',' << c.trials << ',' << csv::number(c.accuracy) << ','
        << csv::number(c.ci_low) << ',' << csv::number(c.ci_high) << '\n';
}

inline void write_coefficients_csv(const DiscriminatorReport& r, std::ostream& out) {
  out << "feature,count,min,q1,median,q3,max\n";
  for (std::size_t f = 0; f < r.feature_names.size(); ++f) {
    auto c = r.coefficients[f];
    if (c.empty()) continue;
    std::sort(c.begin(), c.end());
    auto q = [&](double p) {
      double pos = p * static_cast<double>(c.size() - 1);
      auto lo = static_cast<std::size_t>(std::floor(pos));
      auto hi = std::min(lo + 1, c.size() - 1);
      return c[lo] + (pos - static_cast<double>(lo)) * (c[hi] - c[lo]);
    };
    out << r.feature_names[f] << ',' << c.size() << ',' << csv::number(c.front()) << ',' << csv::number(q(0.25)) << ','
        << csv::number(q(0.5)) << ',' << csv::number(q(0.75)) << ',' << csv::number(c.back()) << '\n';
  }
}

inline void write_csv(const ProgressionReport& r, std::ostream& out) {
  out << "endpoint,stratum,month,data_mean,data_ci_low,data_ci_high,data_n,model_mean,model_ci_low,model_ci_high,"
         "model_n\n";
  for (const auto& p : r.points)
    out << p.endpoint << ',' << '"' << p.stratum << '"' << ',' << p.month << ',' << csv::number(p.data_mean) << ','
        << csv::number(p.data_mean - 1.96 * p.data_se) << ',' << csv::number(p.data_mean + 1.96 * p.data_se) << ','
        << p.data_n << ',' << csv::number(p.model_mean) << ',' << csv::number(p.model_mean - 1.96 * p.model_se) << ','
        << csv::number(p.model_mean + 1.96 * p.model_se) << ',' << p.model_n << '\n';
}

inline void write_csv(const std::vector<SubjectFit>& fits, std::ostream& out) {
  out << "endpoint,month,n,slope,slope_se,intercept,intercept_se,pearson_r\n";
  for (const auto& f : fits)
    out << f.endpoint << ',' << f.month << ',' << f.fit.n << ',' << csv::number(f.fit.slope) << ','
        << csv::number(f.fit.slope_se) << ',' << csv::number(f.fit.intercept) << ','
        << csv::number(f.fit.intercept_se) << ',' << csv::number(f.fit.pearson) << '\n';
}

inline void write_csv(const MarginalReport& r, std::ostream& out) {
  out << "variable,month,n,data_mean,model_mean,t_pvalue,mean_flagged,data_sd,model_sd,levene_pvalue,sd_flagged,"
         "threshold\n";
  for (const auto& c : r.cells)
    out << c.variable << ',' << c.month << ',' << c.n << ',' << csv::number(c.data_mean) << ','
        << csv::number(c.model_mean) << ',' << csv::number(c.t_pvalue) << ',' << (c.mean_flagged ? 1 : 0) << ','
        << csv::number(c.data_sd) << ',' << csv::number(c.model_sd) << ',' << csv::number(c.levene_pvalue) << ','
        << (c.sd_flagged ? 1 : 0) << ',' << csv::number(r.threshold) << '\n';
}

}  // namespace crbm
