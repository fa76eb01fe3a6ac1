#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crbm/csv.hpp"
#include "crbm/errors.hpp"
#include "crbm/random.hpp"
#include "crbm/schema.hpp"

namespace crbm {

/// One subject's record. `visits[t][v]` holds variable v at visit slot t;
/// background variables live in slot 0 only.
struct SubjectRecord {
  std::string id;
  std::string study;
  std::vector<std::vector<Cell>> visits;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

struct PanelDataset {
  Schema schema;
  std::vector<SubjectRecord> subjects;
  int cadence_months = 3;
  int visit_count = 0;

  std::size_t size() const { return subjects.size(); }
};

// ---- cells ----------------------------------------------------------------

inline Cell parse_cell(const VariableSpec& spec, const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (spec.domain == Domain::categorical) {
    for (std::size_t k = 0; k < spec.levels.size(); ++k)
      if (spec.levels[k] == text) return static_cast<double>(k);
    throw ValidationError("value '" + text + "' is not a level of '" + spec.name + "'");
  }
  if (spec.domain == Domain::binary) {
    if (text == "true" || text == "TRUE" || text == "True") return 1.0;
    if (text == "false" || text == "FALSE" || text == "False") return 0.0;
  }
  auto v = csv::parse_number(text);
  if (!v) throw ValidationError("value '" + text + "' of '" + spec.name + "' is not numeric");
  if (!spec.admissible(*v))
    throw ValidationError("value '" + text + "' is not admissible for '" + spec.name + "'");
  if (spec.domain == Domain::ordinal) return spec.level_value(*spec.ordinal_index(*v));
  return *v;
}

inline std::string format_cell(const VariableSpec& spec, const Cell& c) {
  if (!c) return {};
  if (spec.domain == Domain::categorical) return spec.levels.at(static_cast<std::size_t>(*c));
  return csv::number(*c);
}

// ---- validation -----------------------------------------------------------

inline void validate_dataset(const PanelDataset& ds) {
  for (const auto& v : ds.schema) v.validate();
  if (ds.cadence_months <= 0) throw ContractError("cadence must be positive");
  for (const auto& s : ds.subjects) {
    if (s.study.empty()) throw ValidationError("subject '" + s.id + "' has no study label");
    if (static_cast<int>(s.visits.size()) != ds.visit_count)
      throw ValidationError("subject '" + s.id + "' does not have " + std::to_string(ds.visit_count) +
                            " visit slots");
    for (std::size_t t = 0; t < s.visits.size(); ++t) {
      if (s.visits[t].size() != ds.schema.size())
        throw ValidationError("subject '" + s.id + "' has a malformed visit row");
      for (std::size_t v = 0; v < ds.schema.size(); ++v) {
        const auto& c = s.visits[t][v];
        if (!c) continue;
        if (!ds.schema[v].admissible(*c))
          throw ValidationError("subject '" + s.id + "' visit " + std::to_string(t) + " variable '" +
                                ds.schema[v].name + "': value " + csv::number(*c) + " is not admissible");
        if (t > 0 && !ds.schema[v].longitudinal())
          throw ValidationError("background variable '" + ds.schema[v].name + "' set at follow-up visit of '" +
                                s.id + "'");
      }
    }
  }
}

// ---- I/O ------------------------------------------------------------------

/// Parse a wide-form panel: header `subject_id,study_id,visit_month,<vars>`,
/// one row per subject-visit, empty field = MISSING.
inline PanelDataset read_panel(std::istream& in, const Schema& schema, int cadence_months = 3,
                               const std::string& source = "<stream>") {
  PanelDataset ds;
  ds.schema = schema;
  ds.cadence_months = cadence_months;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!csv::trim(line).empty()) {
      header = csv::split_line(line);
      break;
    }
  }
  if (header.empty()) throw SchemaError(source + ": no rows");
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "study_id" || header[2] != "visit_month")
    throw SchemaError(source + ": header must start with subject_id,study_id,visit_month");
  std::vector<std::size_t> column_var;
  for (std::size_t c = 3; c < header.size(); ++c) {
    auto v = find_variable(schema, header[c]);
    if (!v) throw SchemaError(source + ": unknown column '" + header[c] + "'");
    if (std::find(column_var.begin(), column_var.end(), *v) != column_var.end())
      throw SchemaError(source + ": duplicate column '" + header[c] + "'");
    column_var.push_back(*v);
  }
  for (std::size_t v = 0; v < schema.size(); ++v)
    if (std::find(column_var.begin(), column_var.end(), v) == column_var.end())
      throw SchemaError(source + ": schema variable '" + schema[v].name + "' has no column");

  struct Row {
    std::size_t line;
    int slot;
    std::vector<Cell> cells;
  };
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::vector<Row>>> by_subject;
  int max_slot = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    auto f = csv::split_line(line);
    auto where = [&](std::size_t col) {
      return source + " row " + std::to_string(line_no) + ", column '" + header.at(col) + "'";
    };
    if (f.size() != header.size())
      throw ValidationError(source + " row " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw ValidationError(where(0) + ": empty subject id");
    if (f[1].empty()) throw ValidationError(where(1) + ": empty study id");
    auto month = csv::parse_number(f[2]);
    if (!month || *month < 0 || *month != std::floor(*month) ||
        static_cast<long>(*month) % cadence_months != 0)
      throw ValidationError(where(2) + ": visit month '" + f[2] + "' is not a multiple of " +
                            std::to_string(cadence_months));
    Row row{line_no, static_cast<int>(*month) / cadence_months, std::vector<Cell>(schema.size())};
    for (std::size_t c = 3; c < f.size(); ++c) {
      const auto& spec = schema[column_var[c - 3]];
      try {
        row.cells[column_var[c - 3]] = parse_cell(spec, f[c]);
      } catch (const ValidationError&) {
        throw ValidationError(where(c) + ": value '" + f[c] + "' is not admissible for '" + spec.name + "'");
      }
    }
    max_slot = std::max(max_slot, row.slot);
    auto it = by_subject.find(f[0]);
    if (it == by_subject.end()) {
      order.push_back(f[0]);
      it = by_subject.emplace(f[0], std::make_pair(f[1], std::vector<Row>{})).first;
    } else if (it->second.first != f[1]) {
      throw ValidationError(where(1) + ": subject '" + f[0] + "' has more than one study label");
    }
    it->second.second.push_back(std::move(row));
  }
  if (order.empty()) throw SchemaError(source + ": no rows");
  ds.visit_count = max_slot + 1;
  for (const auto& id : order) {
    auto& [study, rows] = by_subject.at(id);
    SubjectRecord rec{id, study, std::vector<std::vector<Cell>>(ds.visit_count, std::vector<Cell>(schema.size()))};
    std::vector<bool> seen(ds.visit_count, false);
    for (const auto& r : rows) {
      if (seen[r.slot])
        throw ValidationError(source + " row " + std::to_string(r.line) + ": duplicate visit for subject '" + id + "'");
      seen[r.slot] = true;
      for (std::size_t v = 0; v < schema.size(); ++v) {
        if (!r.cells[v]) continue;
        if (schema[v].longitudinal()) {
          rec.visits[r.slot][v] = r.cells[v];
        } else {
          auto& slot0 = rec.visits[0][v];
          if (slot0 && *slot0 != *r.cells[v])
            throw ValidationError(source + " row " + std::to_string(r.line) + ": background '" + schema[v].name +
                                  "' conflicts for subject '" + id + "'");
          slot0 = r.cells[v];
        }
      }
    }
    ds.subjects.push_back(std::move(rec));
  }
  return ds;
}

inline PanelDataset load_panel(const std::string& path, const Schema& schema, int cadence_months = 3) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open dataset '" + path + "'");
  return read_panel(in, schema, cadence_months, path);
}

/// Extra trailing columns for a subject's rows (e.g. the twin export).
struct ExtraColumns {
  std::vector<std::string> names;
  std::function<std::vector<std::string>(std::size_t subject)> values;
};

inline void write_panel(const PanelDataset& ds, std::ostream& out, const ExtraColumns& extra = {}) {
  out << "subject_id,study_id,visit_month";
  for (const auto& v : ds.schema) out << ',' << v.name;
  for (const auto& n : extra.names) out << ',' << n;
  out << '\n';
  for (std::size_t s = 0; s < ds.subjects.size(); ++s) {
    const auto& rec = ds.subjects[s];
    std::vector<std::string> ev;
    if (extra.values) ev = extra.values(s);
    for (std::size_t t = 0; t < rec.visits.size(); ++t) {
      const auto& row = rec.visits[t];
      bool any = t == 0;
      for (const auto& c : row) any = any || c.has_value();
      if (!any) continue;
      out << rec.id << ',' << rec.study << ',' << t * ds.cadence_months;
      for (std::size_t v = 0; v < ds.schema.size(); ++v) out << ',' << format_cell(ds.schema[v], row[v]);
      for (const auto& e : ev) out << ',' << e;
      out << '\n';
    }
  }
}

inline void save_panel(const PanelDataset& ds, const std::string& path, const ExtraColumns& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_panel(ds, out, extra);
}

// ---- splitting ------------------------------------------------------------

struct SplitRatios {
  double train = 0.5;
  double val = 0.2;
  double test = 0.3;
};

struct DatasetSplit {
  PanelDataset train, val, test;
  std::vector<std::string> warnings;
};

/// Largest-remainder apportionment of n items by the given ratios. Ties in
/// the fractional parts go to the earlier bucket.
inline std::vector<std::size_t> largest_remainder(std::size_t n, const std::vector<double>& ratios) {
  std::vector<std::size_t> counts(ratios.size());
  std::vector<double> frac(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double q = ratios[i] * static_cast<double>(n);
    // Snap quotas within rounding noise of an integer (0.2 * 10 etc).
    double r = std::round(q);
    if (std::abs(q - r) < 1e-9) q = r;
    counts[i] = static_cast<std::size_t>(std::floor(q));
    frac[i] = q - std::floor(q);
    assigned += counts[i];
  }
  std::vector<std::size_t> idx(ratios.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[idx[k % idx.size()]];
  return counts;
}

/// Stratified (by study) train/validation/test split.
inline DatasetSplit split_dataset(const PanelDataset& ds, SplitRatios ratios, std::uint64_t seed) {
  std::vector<double> r{ratios.train, ratios.val, ratios.test};
  for (double x : r)
    if (!(x > 0)) throw ContractError("split ratios must be positive");
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw ContractError("split ratios must sum to 1");

  DatasetSplit out;
  for (auto* part : {&out.train, &out.val, &out.test}) {
    part->schema = ds.schema;
    part->cadence_months = ds.cadence_months;
    part->visit_count = ds.visit_count;
  }
  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < ds.subjects.size(); ++i) strata[ds.subjects[i].study].push_back(i);

  std::vector<std::vector<std::size_t>> assigned(3);
  std::uint64_t stratum_no = 0;
  for (auto& [study, members] : strata) {
    Rng rng(seed, {0x5b117ULL, stratum_no++, std::hash<std::string>{}(study)});
    shuffle(members, rng);
    if (members.size() < 3) {
      auto largest = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
      out.warnings.push_back("study '" + study + "' has only " + std::to_string(members.size()) +
                             " subject(s); assigned to the largest-ratio split");
      for (auto m : members) assigned[largest].push_back(m);
      continue;
    }
    auto counts = largest_remainder(members.size(), r);
    std::size_t k = 0;
    for (std::size_t part = 0; part < 3; ++part)
      for (std::size_t c = 0; c < counts[part]; ++c) assigned[part].push_back(members[k++]);
  }
  PanelDataset* parts[3] = {&out.train, &out.val, &out.test};
  for (std::size_t part = 0; part < 3; ++part) {
    std::sort(assigned[part].begin(), assigned[part].end());
    for (auto i : assigned[part]) parts[part]->subjects.push_back(ds.subjects[i]);
  }
  return out;
}

/// Concatenate datasets sharing a schema (e.g. train ∪ validation).
inline PanelDataset merge_datasets(const PanelDataset& a, const PanelDataset& b) {
  if (a.schema != b.schema) throw ContractError("cannot merge datasets with different schemas");
  if (a.cadence_months != b.cadence_months) throw ContractError("cannot merge datasets with different cadence");
  PanelDataset out = a;
  out.visit_count = std::max(a.visit_count, b.visit_count);
  for (auto s : b.subjects) out.subjects.push_back(std::move(s));
  for (auto& s : out.subjects) s.visits.resize(out.visit_count, std::vector<Cell>(out.schema.size()));
  return out;
}

// ---- shingles -------------------------------------------------------------

enum class ShingleKind { complete, type_one, type_two };

inline std::string to_string(ShingleKind k) {
  switch (k) {
    case ShingleKind::complete: return "complete";
    case ShingleKind::type_one: return "typeI";
    case ShingleKind::type_two: return "typeII";
  }
  return "?";
}

/// Maps slots at a model cadence onto a dataset's visit slots.
struct CadenceView {
  int data_cadence = 3;
  int model_cadence = 3;
  int data_visits = 0;

  CadenceView(int data_cadence_, int model_cadence_, int data_visits_)
      : data_cadence(data_cadence_), model_cadence(model_cadence_), data_visits(data_visits_) {
    if (model_cadence <= 0 || (model_cadence % data_cadence != 0 && data_cadence % model_cadence != 0))
      throw ContractError("visit schedule at " + std::to_string(data_cadence) +
                          " months cannot be viewed at a " + std::to_string(model_cadence) + "-month cadence");
  }

  /// Number of model slots spanned by the dataset.
  int model_visits() const {
    if (data_visits == 0) return 0;
    return (data_visits - 1) * data_cadence / model_cadence + 1;
  }

  /// Dataset slot of model slot k, or nullopt when that month is not on the
  /// dataset's schedule.
  std::optional<int> data_slot(int k) const {
    if (k < 0) return std::nullopt;
    int month = k * model_cadence;
    if (month % data_cadence != 0) return std::nullopt;
    int t = month / data_cadence;
    if (t >= data_visits) return std::nullopt;
    return t;
  }
};

/// Lag-2 classification from per-slot "fully missing" flags.
inline ShingleKind classify_shingle(const std::vector<bool>& slot_missing) {
  if (slot_missing.size() != 3) return ShingleKind::complete;
  if (slot_missing[0] && slot_missing[2]) return ShingleKind::type_one;
  if (slot_missing[1]) return ShingleKind::type_two;
  return ShingleKind::complete;
}

struct Shingle {
  std::vector<Cell> background;             // one per background variable
  std::vector<std::vector<Cell>> windows;   // L+1 slots x longitudinal variables
  std::size_t subject = 0;
  std::string subject_id;
  int start = 0;                             // first model slot
  ShingleKind kind = ShingleKind::complete;
};

struct ShingleVariables {
  std::vector<std::size_t> longitudinal;
  std::vector<std::size_t> background;

  static ShingleVariables all(const Schema& schema) {
    return select(schema, [](const VariableSpec&) { return true; });
  }

  template <class Pred>
  static ShingleVariables select(const Schema& schema, Pred pred) {
    ShingleVariables sv;
    for (std::size_t v = 0; v < schema.size(); ++v) {
      if (!pred(schema[v])) continue;
      (schema[v].longitudinal() ? sv.longitudinal : sv.background).push_back(v);
    }
    return sv;
  }
};

/// Last model slot with any observed longitudinal value, plus one.
inline int observed_span(const SubjectRecord& rec, const CadenceView& view, const std::vector<std::size_t>& vars) {
  int span = 0;
  for (int k = 0; k < view.model_visits(); ++k) {
    auto t = view.data_slot(k);
    if (!t) continue;
    for (auto v : vars)
      if (rec.visits[*t][v]) {
        span = k + 1;
        break;
      }
  }
  return span;
}

inline std::vector<Shingle> extract_shingles(const PanelDataset& ds, int lag, int cadence_months,
                                             const ShingleVariables& vars) {
  if (lag < 1) throw ContractError("lag must be at least 1");
  CadenceView view(ds.cadence_months, cadence_months, ds.visit_count);
  std::vector<Shingle> out;
  for (std::size_t s = 0; s < ds.subjects.size(); ++s) {
    const auto& rec = ds.subjects[s];
    int span = observed_span(rec, view, vars.longitudinal);
    for (int start = 0; start + lag < span; ++start) {
      Shingle sh;
      sh.subject = s;
      sh.subject_id = rec.id;
      sh.start = start;
      for (auto v : vars.background) sh.background.push_back(rec.visits[0][v]);
      std::vector<bool> slot_missing;
      for (int i = 0; i <= lag; ++i) {
        std::vector<Cell> row(vars.longitudinal.size());
        bool missing = true;
        if (auto t = view.data_slot(start + i)) {
          for (std::size_t j = 0; j < vars.longitudinal.size(); ++j) {
            row[j] = rec.visits[*t][vars.longitudinal[j]];
            missing = missing && !row[j];
          }
        }
        slot_missing.push_back(missing);
        sh.windows.push_back(std::move(row));
      }
      sh.kind = lag == 2 ? classify_shingle(slot_missing) : ShingleKind::complete;
      out.push_back(std::move(sh));
    }
  }
  return out;
}

inline std::vector<Shingle> extract_shingles(const PanelDataset& ds, int lag, int cadence_months) {
  return extract_shingles(ds, lag, cadence_months, ShingleVariables::all(ds.schema));
}

}  // namespace crbm
