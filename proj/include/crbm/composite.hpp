#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crbm/crbm_core.hpp"
#include "crbm/csv.hpp"
#include "crbm/encoding.hpp"
#include "crbm/errors.hpp"
#include "crbm/model_io.hpp"
#include "crbm/panel.hpp"
#include "crbm/random.hpp"

namespace crbm {

/// Hierarchical model: a lag-L 3-month CRBM for the 3-month variables and a
/// 6-month CRBM that completes the 6-month-only variables given the shared
/// ones.
struct CompositeModel {
  Model m3;
  Model m6;
  Schema schema;
  std::vector<std::string> shared;  // variables present in both models
};

inline CompositeModel assemble_composite(Model m3, Model m6, const Schema& schema) {
  check_shape(m3.layer, m3.params);
  check_shape(m6.layer, m6.params);
  if (m6.layer.cadence_months % m3.layer.cadence_months != 0)
    throw AssemblyError("the 6-month model's cadence must be a multiple of the 3-month model's");
  auto has = [](const Model& m, const std::string& name) { return find_variable(m.layer.variables, name).has_value(); };
  CompositeModel c{std::move(m3), std::move(m6), schema, {}};
  for (const auto* m : {&c.m3, &c.m6})
    for (const auto& v : m->layer.variables) {
      auto k = find_variable(schema, v.name);
      if (!k) throw AssemblyError("model variable '" + v.name + "' is not in the schema");
      if (!(schema[*k] == v)) throw AssemblyError("model variable '" + v.name + "' differs from the schema");
    }
  for (const auto& v : schema) {
    bool in3 = has(c.m3, v.name), in6 = has(c.m6, v.name);
    switch (v.groups) {
      case GroupPattern::both:
        if (!in3) throw AssemblyError("shared variable '" + v.name + "' is missing from the 3-month model");
        if (!in6) throw AssemblyError("shared variable '" + v.name + "' is missing from the 6-month model");
        if (!(c.m3.stats.at(v.name) == c.m6.stats.at(v.name)))
          throw AssemblyError("shared variable '" + v.name + "' has different encoding statistics in the two models");
        c.shared.push_back(v.name);
        break;
      case GroupPattern::three_month:
        if (!in3) throw AssemblyError("variable '" + v.name + "' is missing from the 3-month model");
        if (in6) throw AssemblyError("3-month-only variable '" + v.name + "' appears in the 6-month model");
        break;
      case GroupPattern::six_month:
        if (!in6) throw AssemblyError("variable '" + v.name + "' is missing from the 6-month model");
        if (in3) throw AssemblyError("6-month-only variable '" + v.name + "' appears in the 3-month model");
        break;
    }
  }
  return c;
}

struct GenerationOptions {
  int mc_steps = 25;  // Gibbs sweeps per window
};

/// Which component models a conditional sample went through.
struct SampleTrace {
  int windows_3mo = 0;
  int windows_6mo = 0;
  bool used_3mo() const { return windows_3mo > 0; }
  bool used_6mo() const { return windows_6mo > 0; }
};

namespace detail {

/// Fill the missing cells of `records` that `m` models, window by window in
/// generation order. Window j covers model slots j-L+1 .. j+1, so the first
/// window holds the baseline at position L-1 with any pre-baseline slots
/// sampled and discarded. Within a window every still-missing cell is
/// sampled given the rest; filled cells are clamped for later windows.
/// Row i draws from streams keyed by keys[i], the model tag and the window.
inline int fill_with_model(const Model& m, const Schema& schema, int record_cadence, std::vector<SubjectRecord>& records,
                           const std::vector<std::uint64_t>& keys, std::uint64_t model_tag, int steps) {
  if (records.empty()) return 0;
  const auto& L = m.layer;
  std::vector<std::size_t> idx;
  for (const auto& v : L.variables) idx.push_back(require_variable(schema, v.name));
  const int T = static_cast<int>(records.front().visits.size());
  for (const auto& r : records)
    if (static_cast<int>(r.visits.size()) != T) throw ContractError("records in a batch must share a visit count");
  CadenceView view(record_cadence, L.cadence_months, T);
  const int K = view.model_visits();
  const int windows = std::max(1, K - 1);
  auto longi = L.longitudinal_variables();
  auto back = L.background_variables();

  // Does the window ending at model slot j+1 contain anything to sample?
  auto missing_in = [&](const SubjectRecord& r, int j) {
    for (int i = 0; i <= L.lag; ++i) {
      auto t = view.data_slot(j - L.lag + 1 + i);
      if (!t) continue;
      for (auto v : longi)
        if (!r.visits[*t][idx[v]]) return true;
    }
    for (auto v : back)
      if (!r.visits[0][idx[v]]) return true;
    return false;
  };

  const auto N = records.size();
  int used = 0;
  std::vector<double> buf;
  for (int j = 0; j < windows; ++j) {
    bool any = false;
    for (const auto& r : records) any = any || missing_in(r, j);
    if (!any) continue;
    ++used;
    ChainBatch b = ChainBatch::make(L, N);
    for (std::size_t n = 0; n < N; ++n) {
      b.rngs[n] = Rng(keys[n], {model_tag, static_cast<std::uint64_t>(j)});
      auto put = [&](std::size_t v, const Cell& c, std::size_t at) {
        if (!c) return;
        buf.assign(unit_width(L.variables[v]), 0.0);
        encode_cell(L.variables[v], m.stats.at(L.variables[v].name), *c, buf);
        for (std::size_t u = 0; u < buf.size(); ++u) {
          b.visible(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(at + u)) = buf[u];
          b.clamp(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(at + u)) = true;
        }
      };
      for (int i = 0; i <= L.lag; ++i)
        if (auto t = view.data_slot(j - L.lag + 1 + i))
          for (auto v : longi) put(v, records[n].visits[*t][idx[v]], L.cell(v, i));
      for (auto v : back) put(v, records[n].visits[0][idx[v]], L.cell(v, 0));
    }
    init_from_bias(L, m.params, b);
    gibbs_sweeps(L, m.params, b, steps);
    for (std::size_t n = 0; n < N; ++n) {
      auto take = [&](std::size_t v, Cell& c, std::size_t at) {
        if (c) return;
        const auto& spec = L.variables[v];
        buf.assign(unit_width(spec), 0.0);
        for (std::size_t u = 0; u < buf.size(); ++u)
          buf[u] = b.visible(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(at + u));
        c = decode_cell(spec, m.stats.at(spec.name), buf);
      };
      for (int i = 0; i <= L.lag; ++i)
        if (auto t = view.data_slot(j - L.lag + 1 + i))
          for (auto v : longi) take(v, records[n].visits[*t][idx[v]], L.cell(v, i));
      for (auto v : back) take(v, records[n].visits[0][idx[v]], L.cell(v, 0));
    }
  }
  return used;
}

}  // namespace detail

inline constexpr std::uint64_t kTag3 = 0x3303ULL;
inline constexpr std::uint64_t kTag6 = 0x6606ULL;

/// Fill every missing cell that lies on a component model's schedule:
/// first through the 3-month model, then the 6-month-only variables
/// through the 6-month model. Observed cells are never changed.
inline std::vector<SubjectRecord> conditional_sample_batch(const CompositeModel& c, std::vector<SubjectRecord> records,
                                                           int record_cadence, const std::vector<std::uint64_t>& keys,
                                                           const GenerationOptions& opt = {},
                                                           SampleTrace* trace = nullptr) {
  if (keys.size() != records.size()) throw ContractError("one stream key per record is required");
  int w3 = detail::fill_with_model(c.m3, c.schema, record_cadence, records, keys, kTag3, opt.mc_steps);
  int w6 = detail::fill_with_model(c.m6, c.schema, record_cadence, records, keys, kTag6, opt.mc_steps);
  if (trace) {
    trace->windows_3mo += w3;
    trace->windows_6mo += w6;
  }
  return records;
}

inline SubjectRecord conditional_sample(const CompositeModel& c, const SubjectRecord& record, std::uint64_t seed,
                                        int record_cadence = 3, const GenerationOptions& opt = {},
                                        SampleTrace* trace = nullptr) {
  PanelDataset check{c.schema, {record}, record_cadence, static_cast<int>(record.visits.size())};
  validate_dataset(check);
  return conditional_sample_batch(c, {record}, record_cadence, {stream_key(seed, {0xc5ULL})}, opt, trace).front();
}

/// Number of 3-month visit slots spanning months 0..T_months.
inline int visit_slots(int T_months, int cadence = 3) {
  if (T_months < 0 || T_months % cadence != 0)
    throw ContractError("horizon of " + std::to_string(T_months) + " months is not a multiple of " +
                        std::to_string(cadence));
  return T_months / cadence + 1;
}

/// Unconditional sample of a complete record over months 0..T_months.
inline SubjectRecord generate_digital_subject(const CompositeModel& c, int T_months, std::uint64_t seed,
                                              int burn_in = 200) {
  if (T_months % 6 != 0) throw ContractError("Digital Subject horizon must be a multiple of 6 months");
  const int T = visit_slots(T_months, c.m3.layer.cadence_months);
  SubjectRecord r{"subject", "synthetic",
                  std::vector<std::vector<Cell>>(static_cast<std::size_t>(T), std::vector<Cell>(c.schema.size()))};
  GenerationOptions opt{burn_in};
  return conditional_sample_batch(c, {r}, c.m3.layer.cadence_months, {stream_key(seed, {0xd5ULL})}, opt).front();
}

struct TwinSet {
  std::string source_subject_id;
  std::uint64_t seed = 0;
  std::vector<SubjectRecord> twins;
};

/// Stream key of twin k of a subject.
inline std::uint64_t twin_key(std::uint64_t seed, const std::string& subject_id, std::size_t k) {
  return stream_key(seed, {0x7717ULL, std::hash<std::string>{}(subject_id), k});
}

/// Baseline-only copy of a subject laid out on T slots at the generation
/// cadence.
inline SubjectRecord baseline_record(const SubjectRecord& subject, std::size_t variables, int T) {
  SubjectRecord r{subject.id, subject.study,
                  std::vector<std::vector<Cell>>(static_cast<std::size_t>(T), std::vector<Cell>(variables))};
  if (!subject.visits.empty()) r.visits[0] = subject.visits[0];
  return r;
}

/// Twins of many subjects, batched across subjects and twins.
inline std::vector<TwinSet> generate_twins_for(const CompositeModel& c, const std::vector<SubjectRecord>& subjects,
                                               int n, int T_months, std::uint64_t seed,
                                               const GenerationOptions& opt = {}, std::size_t chunk = 4096) {
  if (n < 1) throw ContractError("twin count must be at least 1");
  const int cad = c.m3.layer.cadence_months;
  const int T = visit_slots(T_months, cad);
  {
    PanelDataset check{c.schema, {}, cad, 1};
    for (const auto& s : subjects) {
      if (s.visits.empty()) throw ValidationError("subject '" + s.id + "' has no baseline visit");
      check.subjects.push_back({s.id, s.study, {s.visits[0]}});
    }
    validate_dataset(check);
  }
  std::vector<TwinSet> out;
  std::vector<SubjectRecord> rows;
  std::vector<std::uint64_t> keys;
  std::vector<std::pair<std::size_t, std::size_t>> where;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    out.push_back({subjects[s].id, seed, std::vector<SubjectRecord>(static_cast<std::size_t>(n))});
    for (int k = 0; k < n; ++k) {
      rows.push_back(baseline_record(subjects[s], c.schema.size(), T));
      keys.push_back(twin_key(seed, subjects[s].id, static_cast<std::size_t>(k)));
      where.emplace_back(s, static_cast<std::size_t>(k));
    }
  }
  for (std::size_t b0 = 0; b0 < rows.size(); b0 += chunk) {
    std::size_t b1 = std::min(rows.size(), b0 + chunk);
    std::vector<SubjectRecord> part(rows.begin() + static_cast<std::ptrdiff_t>(b0),
                                    rows.begin() + static_cast<std::ptrdiff_t>(b1));
    std::vector<std::uint64_t> pk(keys.begin() + static_cast<std::ptrdiff_t>(b0),
                                  keys.begin() + static_cast<std::ptrdiff_t>(b1));
    part = conditional_sample_batch(c, std::move(part), cad, pk, opt);
    for (std::size_t i = b0; i < b1; ++i) {
      auto [s, k] = where[i];
      auto& twin = out[s].twins[k];
      twin = std::move(part[i - b0]);
      twin.id = subjects[s].id + "-t" + std::to_string(k);
    }
  }
  return out;
}

inline TwinSet generate_digital_twins(const CompositeModel& c, const SubjectRecord& baseline, int n, int T_months,
                                      std::uint64_t seed, const GenerationOptions& opt = {}) {
  return generate_twins_for(c, {baseline}, n, T_months, seed, opt).front();
}

/// One model alone (used to score sweep candidates): twins of `subjects`
/// from their baselines, on the dataset's cadence.
inline std::vector<SubjectRecord> single_model_twins(const Model& m, const PanelDataset& ds, std::uint64_t seed,
                                                     int steps = 25) {
  std::vector<SubjectRecord> rows;
  std::vector<std::uint64_t> keys;
  for (const auto& s : ds.subjects) {
    rows.push_back(baseline_record(s, ds.schema.size(), ds.visit_count));
    keys.push_back(twin_key(seed, s.id, 0));
  }
  detail::fill_with_model(m, ds.schema, ds.cadence_months, rows, keys, kTag3, steps);
  return rows;
}

/// All twin sets as one panel with `twin_index,source_subject_id,seed`.
inline void write_twins(const Schema& schema, int cadence, const std::vector<TwinSet>& sets, std::ostream& out) {
  PanelDataset ds{schema, {}, cadence, 0};
  std::vector<std::vector<std::string>> extra;
  for (const auto& set : sets)
    for (std::size_t k = 0; k < set.twins.size(); ++k) {
      ds.subjects.push_back(set.twins[k]);
      ds.visit_count = std::max(ds.visit_count, static_cast<int>(set.twins[k].visits.size()));
      extra.push_back({std::to_string(k), set.source_subject_id, std::to_string(set.seed)});
    }
  write_panel(ds, out, {{"twin_index", "source_subject_id", "seed"}, [&](std::size_t s) { return extra[s]; }});
}

/// Inverse of `write_twins`: twin sets in order of first appearance.
inline std::vector<TwinSet> read_twins(std::istream& in, const Schema& schema, int cadence = 3,
                                       const std::string& source = "<stream>") {
  std::string line, body;
  std::size_t width = 0;
  std::map<std::string, std::array<std::string, 3>> meta;
  bool header = true;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    auto f = csv::split_line(line);
    if (header) {
      width = f.size();
      if (width < 6 || f[width - 3] != "twin_index" || f[width - 2] != "source_subject_id" || f[width - 1] != "seed")
        throw SchemaError(source + ": header must end with twin_index,source_subject_id,seed");
      header = false;
    } else {
      if (f.size() != width) throw ValidationError(source + ": row has " + std::to_string(f.size()) + " fields");
      std::array<std::string, 3> m{f[width - 3], f[width - 2], f[width - 1]};
      auto [it, fresh] = meta.emplace(f[0], m);
      if (!fresh && it->second != m) throw ValidationError(source + ": twin '" + f[0] + "' has conflicting metadata");
    }
    auto cut = line.size();
    for (int k = 0; k < 3; ++k) cut = line.rfind(',', cut - 1);
    body += line.substr(0, cut) + '\n';
  }
  if (header) throw SchemaError(source + ": no rows");
  std::istringstream panel_in(body);
  auto ds = read_panel(panel_in, schema, cadence, source);
  std::vector<TwinSet> sets;
  std::map<std::string, std::size_t> where;
  for (auto& rec : ds.subjects) {
    const auto& m = meta.at(rec.id);
    auto it = where.find(m[1]);
    if (it == where.end()) {
      it = where.emplace(m[1], sets.size()).first;
      sets.push_back({m[1], static_cast<std::uint64_t>(std::stoull(m[2])), {}});
    }
    auto& set = sets[it->second];
    if (std::to_string(set.twins.size()) != m[0])
      throw ValidationError(source + ": twins of '" + m[1] + "' are out of order");
    rec.visits.resize(static_cast<std::size_t>(ds.visit_count), std::vector<Cell>(schema.size()));
    set.twins.push_back(std::move(rec));
  }
  return sets;
}

inline std::vector<TwinSet> load_twins(const std::string& path, const Schema& schema, int cadence = 3) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open twins file '" + path + "'");
  return read_twins(in, schema, cadence, path);
}

/// Twin k of every set as a dataset (a one-twin-per-subject cohort).
inline PanelDataset twin_cohort(const Schema& schema, int cadence, const std::vector<TwinSet>& sets, std::size_t k) {
  PanelDataset ds{schema, {}, cadence, 0};
  for (const auto& set : sets) {
    if (k >= set.twins.size()) throw ContractError("twin index out of range");
    ds.subjects.push_back(set.twins[k]);
    ds.visit_count = std::max(ds.visit_count, static_cast<int>(set.twins[k].visits.size()));
  }
  return ds;
}

}  // namespace crbm
