#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crbm/errors.hpp"
#include "crbm/panel.hpp"
#include "crbm/random.hpp"
#include "crbm/schema.hpp"

namespace crbm {

/// Emission of one observable: loading·s + loading2·u + offset + noise,
/// then mapped to the variable's domain. Background variables read the
/// baseline latents only.
struct SynthVariable {
  VariableSpec spec;
  double loading = 1.0;
  double loading2 = 0.0;
  double offset = 0.0;
  double emission_sd = 0.5;
};

struct SynthConfig {
  int n_subjects = 500;
  int visits = 7;                 // at 3-month cadence
  double drift = 0.25;            // δ per visit, main latent
  double latent_noise = 0.15;     // per-visit increment sd, main latent
  double baseline_sd = 1.0;       // sd of s_0 (and u_0)
  bool second_latent = true;
  double drift2 = 0.0;
  double latent_noise2 = 0.15;
  std::vector<SynthVariable> variables;
  double dropout = 0.0;           // per-visit probability of leaving the study
  std::vector<std::string> studies{"study-A", "study-B", "study-C"};
  std::uint64_t seed = 0;

  void validate() const {
    if (n_subjects < 1) throw ContractError("n_subjects must be at least 1");
    if (visits < 1) throw ContractError("visits must be at least 1");
    if (!(latent_noise >= 0) || !(latent_noise2 >= 0) || !(baseline_sd >= 0))
      throw ContractError("noise scales must be non-negative");
    if (!(dropout >= 0 && dropout < 1)) throw ContractError("dropout rate must lie in [0, 1)");
    if (studies.empty()) throw ContractError("at least one study label is required");
    if (variables.empty()) throw ContractError("no variables configured");
    for (const auto& v : variables) {
      v.spec.validate();
      if (!std::isfinite(v.loading) || !std::isfinite(v.loading2) || !std::isfinite(v.offset) ||
          !(v.emission_sd >= 0))
        throw ContractError("variable '" + v.spec.name + "' has invalid emission parameters");
    }
  }

  Schema schema() const {
    Schema s;
    for (const auto& v : variables) s.push_back(v.spec);
    return s;
  }
};

/// Twelve continuous longitudinal variables (four per group pattern) on
/// scales spanning two decades, and two background variables, with a
/// second latent for cross-correlations.
inline SynthConfig default_synth_config(int n_subjects = 500, int visits = 7, std::uint64_t seed = 0) {
  SynthConfig c;
  c.n_subjects = n_subjects;
  c.visits = visits;
  c.seed = seed;
  const char* prefix[3] = {"cog", "func", "box"};
  GroupPattern groups[3] = {GroupPattern::three_month, GroupPattern::both, GroupPattern::six_month};
  int i = 0;
  for (int g = 0; g < 3; ++g)
    for (int k = 1; k <= 4; ++k, ++i) {
      SynthVariable v;
      v.spec = continuous_variable(std::string(prefix[g]) + std::to_string(k), Role::longitudinal, groups[g], -1e6, 1e6);
      double scale = std::pow(10.0, 0.5 * (i % 4) - 0.5);
      v.loading = scale * (0.6 + 0.1 * (i % 5));
      v.loading2 = scale * 0.6 * ((i % 3) - 1);
      v.offset = scale * (10.0 + i);
      v.emission_sd = scale * 0.5;
      c.variables.push_back(v);
    }
  SynthVariable age;
  age.spec = continuous_variable("age", Role::background, GroupPattern::both, 0, 200);
  age.loading = 3.0;
  age.loading2 = 0.0;
  age.offset = 72.0;
  age.emission_sd = 5.0;
  c.variables.push_back(age);
  SynthVariable sex;
  sex.spec = binary_variable("sex", Role::background, GroupPattern::both);
  sex.loading = 0.0;
  sex.loading2 = 0.8;
  sex.offset = 0.0;
  sex.emission_sd = 1.0;
  c.variables.push_back(sex);
  return c;
}

/// Endpoint definitions matching `default_synth_config` (sums of components).
inline nlohmann::json default_synth_endpoints() {
  return {{"ADAS-Cog11", {"func1", "func2", "func3", "func4"}},
          {"CDR-SB", {"box1", "box2", "box3", "box4"}},
          {"MMSE", {"cog1", "cog2"}}};
}

struct GroundTruth {
  SynthConfig config;
  std::vector<std::string> subject_ids;
  std::vector<std::vector<double>> latent;   // subject x visit
  std::vector<std::vector<double>> latent2;  // subject x visit (zeros when disabled)
};

struct SyntheticCohort {
  PanelDataset data;
  GroundTruth truth;
};

inline double map_to_domain(const VariableSpec& spec, double y) {
  switch (spec.domain) {
    case Domain::continuous: return std::clamp(y, spec.range_min, spec.range_max);
    case Domain::binary: return y > 0.0 ? 1.0 : 0.0;
    case Domain::ordinal: {
      std::size_t best = 0;
      for (std::size_t k = 1; k < spec.levels.size(); ++k)
        if (std::abs(spec.level_value(k) - y) < std::abs(spec.level_value(best) - y)) best = k;
      return spec.level_value(best);
    }
    case Domain::categorical: {
      double k = std::round(y);
      return std::clamp(k, 0.0, static_cast<double>(spec.levels.size() - 1));
    }
  }
  return y;
}

/// Cohort from the latent progression process. Every subject draws from its
/// own stream, so the cohort is a pure function of (cfg, seed).
inline SyntheticCohort generate_cohort(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SyntheticCohort out;
  out.truth.config = cfg;
  out.truth.config.seed = seed;
  auto& ds = out.data;
  ds.schema = cfg.schema();
  ds.cadence_months = 3;
  ds.visit_count = cfg.visits;
  const auto V = cfg.variables.size();
  for (int s = 0; s < cfg.n_subjects; ++s) {
    Rng rng(seed, {0x5a71ULL, static_cast<std::uint64_t>(s)});
    char id[32];
    std::snprintf(id, sizeof id, "S%05d", s);
    SubjectRecord rec{id, cfg.studies[static_cast<std::size_t>(s) % cfg.studies.size()],
                      std::vector<std::vector<Cell>>(static_cast<std::size_t>(cfg.visits), std::vector<Cell>(V))};
    std::vector<double> lat(static_cast<std::size_t>(cfg.visits)), lat2(lat.size(), 0.0);
    lat[0] = rng.normal(0.0, cfg.baseline_sd);
    double u0 = rng.normal(0.0, cfg.baseline_sd);
    if (cfg.second_latent) lat2[0] = u0;
    for (int t = 1; t < cfg.visits; ++t) {
      double e1 = rng.normal(), e2 = rng.normal();
      lat[static_cast<std::size_t>(t)] = lat[t - 1] + cfg.drift + cfg.latent_noise * e1;
      if (cfg.second_latent) lat2[static_cast<std::size_t>(t)] = lat2[t - 1] + cfg.drift2 + cfg.latent_noise2 * e2;
    }
    int last = cfg.visits - 1;
    for (int t = 1; t < cfg.visits; ++t) {
      double r = rng.uniform();
      if (cfg.dropout > 0 && r < cfg.dropout && last == cfg.visits - 1) last = t - 1;
    }
    for (int t = 0; t < cfg.visits; ++t)
      for (std::size_t v = 0; v < V; ++v) {
        const auto& sv = cfg.variables[v];
        double noise = rng.normal();
        bool longi = sv.spec.longitudinal();
        if (!longi && t > 0) continue;
        if (t > last) continue;
        if (longi && sv.spec.groups == GroupPattern::six_month && t % 2 != 0) continue;
        double y = sv.loading * lat[static_cast<std::size_t>(t)] + sv.loading2 * lat2[static_cast<std::size_t>(t)] +
                   sv.offset + sv.emission_sd * noise;
        rec.visits[static_cast<std::size_t>(t)][v] = map_to_domain(sv.spec, y);
      }
    ds.subjects.push_back(std::move(rec));
    out.truth.subject_ids.push_back(id);
    out.truth.latent.push_back(std::move(lat));
    out.truth.latent2.push_back(std::move(lat2));
  }
  return out;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conditional moments of a continuous observable at `visit` given the
/// subject's baseline latents.
inline Moments true_conditional_moments(const GroundTruth& gt, std::size_t subject, const std::string& variable,
                                        int visit) {
  const auto& cfg = gt.config;
  auto it = std::find_if(cfg.variables.begin(), cfg.variables.end(),
                         [&](const auto& v) { return v.spec.name == variable; });
  if (it == cfg.variables.end()) throw ContractError("unknown variable '" + variable + "'");
  if (it->spec.domain != Domain::continuous)
    throw OracleScopeError("closed-form moments exist only for continuous emissions");
  if (visit < 0 || visit >= cfg.visits) throw ContractError("visit out of range");
  if (!it->spec.longitudinal() && visit != 0) throw ContractError("background variables exist at baseline only");
  double t = visit;
  double s0 = gt.latent.at(subject).at(0), u0 = gt.latent2.at(subject).at(0);
  Moments m;
  m.mean = it->loading * (s0 + cfg.drift * t) + it->offset;
  m.variance = t * cfg.latent_noise * cfg.latent_noise * it->loading * it->loading +
               it->emission_sd * it->emission_sd;
  if (cfg.second_latent) {
    m.mean += it->loading2 * (u0 + cfg.drift2 * t);
    m.variance += t * cfg.latent_noise2 * cfg.latent_noise2 * it->loading2 * it->loading2;
  }
  return m;
}

/// Expected change from baseline of a sum of continuous components after
/// `visit` steps (same for every subject).
inline double true_mean_change(const GroundTruth& gt, const std::vector<std::string>& components, int visit) {
  double d = 0.0;
  for (const auto& name : components)
    for (const auto& v : gt.config.variables)
      if (v.spec.name == name)
        d += (v.loading * gt.config.drift + (gt.config.second_latent ? v.loading2 * gt.config.drift2 : 0.0)) * visit;
  return d;
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : gt.config.variables)
    vars.push_back({{"variable", to_json(v.spec)},
                    {"loading", v.loading},
                    {"loading2", v.loading2},
                    {"offset", v.offset},
                    {"emission_sd", v.emission_sd}});
  const auto& c = gt.config;
  return {{"n_subjects", c.n_subjects},
          {"visits", c.visits},
          {"cadence_months", 3},
          {"drift", c.drift},
          {"latent_noise", c.latent_noise},
          {"baseline_sd", c.baseline_sd},
          {"second_latent", c.second_latent},
          {"drift2", c.drift2},
          {"latent_noise2", c.latent_noise2},
          {"dropout", c.dropout},
          {"studies", c.studies},
          {"seed", c.seed},
          {"variables", vars},
          {"subject_ids", gt.subject_ids},
          {"latent", gt.latent},
          {"latent2", gt.latent2}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  GroundTruth gt;
  auto& c = gt.config;
  c.n_subjects = j.at("n_subjects");
  c.visits = j.at("visits");
  c.drift = j.at("drift");
  c.latent_noise = j.at("latent_noise");
  c.baseline_sd = j.at("baseline_sd");
  c.second_latent = j.at("second_latent");
  c.drift2 = j.at("drift2");
  c.latent_noise2 = j.at("latent_noise2");
  c.dropout = j.at("dropout");
  c.studies = j.at("studies").get<std::vector<std::string>>();
  c.seed = j.at("seed");
  for (const auto& v : j.at("variables"))
    c.variables.push_back({variable_from_json(v.at("variable")), v.at("loading"), v.at("loading2"), v.at("offset"),
                           v.at("emission_sd")});
  gt.subject_ids = j.at("subject_ids").get<std::vector<std::string>>();
  gt.latent = j.at("latent").get<std::vector<std::vector<double>>>();
  gt.latent2 = j.at("latent2").get<std::vector<std::vector<double>>>();
  return gt;
}

}  // namespace crbm
