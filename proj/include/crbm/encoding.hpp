#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crbm/errors.hpp"
#include "crbm/panel.hpp"
#include "crbm/schema.hpp"

namespace crbm {

enum class UnitKind { gaussian, binary, softmax };

inline UnitKind unit_kind(const VariableSpec& v) {
  switch (v.domain) {
    case Domain::continuous:
    case Domain::ordinal: return UnitKind::gaussian;
    case Domain::binary: return UnitKind::binary;
    case Domain::categorical: return UnitKind::softmax;
  }
  return UnitKind::gaussian;
}

/// Number of visible units a variable occupies (one-of-K for categorical).
inline std::size_t unit_width(const VariableSpec& v) {
  return v.domain == Domain::categorical ? v.levels.size() : 1;
}

/// Location/scale used to standardize a Gaussian-encoded variable.
struct VariableStats {
  double mean = 0.0;
  double scale = 1.0;
  friend bool operator==(const VariableStats&, const VariableStats&) = default;
};

/// Per-variable encoding statistics, keyed by variable name.
struct EncodingStats {
  std::vector<std::string> names;
  std::vector<VariableStats> values;

  const VariableStats& at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return values[i];
    throw EncodingError("no encoding statistics for '" + name + "'");
  }

  bool contains(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
  }

  /// Restriction to a subset of variables (in the given order).
  EncodingStats subset(const Schema& vars) const {
    EncodingStats s;
    for (const auto& v : vars) {
      s.names.push_back(v.name);
      s.values.push_back(at(v.name));
    }
    return s;
  }

  friend bool operator==(const EncodingStats&, const EncodingStats&) = default;
};

/// Statistics from a (training) dataset. Continuous variables are
/// standardized; ordinal variables standardize their level index.
inline EncodingStats compute_stats(const PanelDataset& source) {
  EncodingStats st;
  for (std::size_t v = 0; v < source.schema.size(); ++v) {
    const auto& spec = source.schema[v];
    st.names.push_back(spec.name);
    VariableStats vs;
    if (spec.domain == Domain::continuous || spec.domain == Domain::ordinal) {
      std::vector<double> xs;
      for (const auto& s : source.subjects)
        for (std::size_t t = 0; t < s.visits.size(); ++t) {
          const auto& c = s.visits[t][v];
          if (!c) continue;
          xs.push_back(spec.domain == Domain::ordinal ? static_cast<double>(*spec.ordinal_index(*c)) : *c);
        }
      if (spec.domain == Domain::continuous && xs.size() < 2)
        throw EncodingError("variable '" + spec.name + "' has fewer than 2 observed training values");
      if (!xs.empty()) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
        if (!(sd > 0.0)) {
          if (spec.domain == Domain::continuous)
            throw EncodingError("variable '" + spec.name + "' has zero variance in the training split");
          sd = 1.0;
        }
        vs = {mean, sd};
      }
    }
    st.values.push_back(vs);
  }
  return st;
}

/// Write the encoded units of one cell into `out` (width = unit_width).
inline void encode_cell(const VariableSpec& spec, const VariableStats& st, double value, std::span<double> out) {
  switch (spec.domain) {
    case Domain::continuous: out[0] = (value - st.mean) / st.scale; break;
    case Domain::ordinal:
      out[0] = (static_cast<double>(*spec.ordinal_index(value)) - st.mean) / st.scale;
      break;
    case Domain::binary: out[0] = value; break;
    case Domain::categorical:
      std::fill(out.begin(), out.end(), 0.0);
      out[static_cast<std::size_t>(value)] = 1.0;
      break;
  }
}

/// Map encoded units back to an admissible value: continuous values are
/// clamped to the range, ordinal values rounded and clamped to the levels.
inline double decode_cell(const VariableSpec& spec, const VariableStats& st, std::span<const double> units) {
  switch (spec.domain) {
    case Domain::continuous: {
      double x = units[0] * st.scale + st.mean;
      if (!std::isfinite(x)) x = st.mean;
      return std::clamp(x, spec.range_min, spec.range_max);
    }
    case Domain::ordinal: {
      double idx = std::round(units[0] * st.scale + st.mean);
      if (!std::isfinite(idx)) idx = 0;
      idx = std::clamp(idx, 0.0, static_cast<double>(spec.levels.size() - 1));
      return spec.level_value(static_cast<std::size_t>(idx));
    }
    case Domain::binary: return units[0] >= 0.5 ? 1.0 : 0.0;
    case Domain::categorical: {
      auto it = std::max_element(units.begin(), units.end());
      return static_cast<double>(it - units.begin());
    }
  }
  return 0.0;
}

/// Unit offsets of every schema variable in a flat per-visit vector.
struct UnitLayout {
  std::vector<std::size_t> offset;
  std::vector<std::size_t> width;
  std::size_t units = 0;

  explicit UnitLayout(const Schema& schema) {
    for (const auto& v : schema) {
      offset.push_back(units);
      width.push_back(unit_width(v));
      units += unit_width(v);
    }
  }
  UnitLayout() = default;
};

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EncodedSubject {
  std::string id;
  std::string study;
  Eigen::MatrixXd values;  // visits x units
  BoolMatrix observed;     // visits x units
};

/// Unit-encoded panel with an explicit observation mask.
struct EncodedDataset {
  Schema schema;
  EncodingStats stats;
  UnitLayout layout;
  int cadence_months = 3;
  int visit_count = 0;
  std::vector<EncodedSubject> subjects;
};

inline EncodedSubject encode_subject(const Schema& schema, const EncodingStats& stats, const UnitLayout& layout,
                                     const SubjectRecord& rec) {
  EncodedSubject es{rec.id, rec.study, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rec.visits.size()),
                                                             static_cast<Eigen::Index>(layout.units)),
                    BoolMatrix::Constant(static_cast<Eigen::Index>(rec.visits.size()),
                                         static_cast<Eigen::Index>(layout.units), false)};
  std::vector<double> buf;
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const auto& st = stats.at(schema[v].name);
    buf.assign(layout.width[v], 0.0);
    for (std::size_t t = 0; t < rec.visits.size(); ++t) {
      const auto& c = rec.visits[t][v];
      if (!c) continue;
      encode_cell(schema[v], st, *c, buf);
      for (std::size_t u = 0; u < layout.width[v]; ++u) {
        es.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(layout.offset[v] + u)) = buf[u];
        es.observed(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(layout.offset[v] + u)) = true;
      }
    }
  }
  return es;
}

inline EncodedDataset encode(const PanelDataset& ds, const EncodingStats& stats) {
  EncodedDataset out{ds.schema, stats, UnitLayout(ds.schema), ds.cadence_months, ds.visit_count, {}};
  for (const auto& v : ds.schema) (void)stats.at(v.name);
  for (const auto& s : ds.subjects) out.subjects.push_back(encode_subject(ds.schema, stats, out.layout, s));
  return out;
}

/// Encode `ds` using statistics computed from `stats_source` only.
inline EncodedDataset encode(const PanelDataset& ds, const PanelDataset& stats_source) {
  return encode(ds, compute_stats(stats_source));
}

inline PanelDataset decode(const EncodedDataset& enc) {
  PanelDataset ds{enc.schema, {}, enc.cadence_months, enc.visit_count};
  for (const auto& es : enc.subjects) {
    SubjectRecord rec{es.id, es.study,
                      std::vector<std::vector<Cell>>(static_cast<std::size_t>(es.values.rows()),
                                                     std::vector<Cell>(enc.schema.size()))};
    std::vector<double> buf;
    for (std::size_t v = 0; v < enc.schema.size(); ++v) {
      const auto& st = enc.stats.at(enc.schema[v].name);
      for (Eigen::Index t = 0; t < es.values.rows(); ++t) {
        auto off = static_cast<Eigen::Index>(enc.layout.offset[v]);
        if (!es.observed(t, off)) continue;
        buf.assign(enc.layout.width[v], 0.0);
        for (std::size_t u = 0; u < buf.size(); ++u) buf[u] = es.values(t, off + static_cast<Eigen::Index>(u));
        rec.visits[static_cast<std::size_t>(t)][v] = decode_cell(enc.schema[v], st, buf);
      }
    }
    ds.subjects.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace crbm
