// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crbm/crbm.hpp"

using namespace crbm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream o;
  o.precision(digits);
  o << x;
  return o.str();
}

LayerConfig binary_layer(int longitudinal, int background, int lag, int hidden) {
  Schema vars;
  for (int i = 0; i < longitudinal; ++i)
    vars.push_back(binary_variable("b" + std::to_string(i), Role::longitudinal, GroupPattern::three_month));
  for (int i = 0; i < background; ++i)
    vars.push_back(binary_variable("s" + std::to_string(i), Role::background, GroupPattern::both));
  return make_layer(vars, lag, 3, hidden);
}

CRBMParams random_params(const LayerConfig& layer, std::uint64_t seed, double scale) {
  Rng rng(seed, {0xacceULL});
  CRBMParams p = CRBMParams::zeros(layer);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal(0, scale);
  for (Eigen::Index i = 0; i < p.location.size(); ++i) p.location[i] = rng.normal(0, scale);
  for (Eigen::Index i = 0; i < p.hidden_bias.size(); ++i) p.hidden_bias[i] = rng.normal(0, scale);
  return p;
}

// The tiny models of criteria 1-3: (longitudinal, background, lag, hidden).
struct TinyModel {
  LayerConfig layer;
  CRBMParams params;
};

std::vector<TinyModel> tiny_models() {
  const int shapes[6][4] = {{2, 1, 1, 3}, {3, 0, 1, 4}, {2, 0, 2, 4}, {1, 2, 2, 2}, {2, 2, 1, 4}, {1, 1, 1, 1}};
  std::vector<TinyModel> out;
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto layer = binary_layer(shapes[s][0], shapes[s][1], shapes[s][2], shapes[s][3]);
    out.push_back({layer, random_params(layer, s, 0.9)});
  }
  return out;
}

std::uint64_t pack(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::uint64_t code = 0;
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] > 0.5) code |= 1ULL << j;
  return code;
}

// ---- 1 ------------------------------------------------------------------------

Outcome gibbs_vs_enumeration() {
  Outcome o{true, ""};
  double worst_tv = 0, worst_time = 0;
  for (const auto& m : tiny_models()) {
    auto t0 = Clock::now();
    auto target = exact_enumerate(m.layer, m.params).visible_marginals();
    const std::size_t n = 100000;
    ChainBatch b = ChainBatch::make(m.layer, n);
    for (std::size_t i = 0; i < n; ++i) b.rngs[i] = Rng(101, {i});
    init_from_bias(m.layer, m.params, b);
    gibbs_sweeps(m.layer, m.params, b, 50);
    std::vector<double> freq(target.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) freq[pack(b.visible.row(static_cast<Eigen::Index>(i)))] += 1.0 / n;
    double tv = 0;
    for (std::size_t x = 0; x < target.size(); ++x) tv += 0.5 * std::abs(freq[x] - target[x]);
    double secs = seconds_since(t0);
    worst_tv = std::max(worst_tv, tv);
    worst_time = std::max(worst_time, secs);
    o.pass = o.pass && tv <= 0.02 && secs < 60;
  }
  o.detail = "6 models, 1e5 draws, k=50; max TV " + fmt(worst_tv) + ", max time " + fmt(worst_time, 3) + "s";
  return o;
}

// ---- 2 ------------------------------------------------------------------------

std::vector<EncodedShingle> binary_data(const LayerConfig& layer, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<EncodedShingle> out;
  const auto V = static_cast<Eigen::Index>(layer.visible());
  for (std::size_t i = 0; i < n; ++i) {
    EncodedShingle sh{Eigen::VectorXd(V), BoolVector::Constant(V, true), ShingleKind::complete, i, 0, i};
    for (Eigen::Index j = 0; j < V; ++j) sh.values[j] = rng.uniform() < 0.25 + 0.15 * static_cast<double>(j % 4);
    out.push_back(sh);
  }
  return out;
}

Outcome gradient_accuracy() {
  Outcome o{true, ""};
  double worst = 0;
  bool bitwise = true;
  auto models = tiny_models();
  for (std::size_t k = 0; k < models.size(); ++k) {
    const auto& m = models[k];
    auto data = binary_data(m.layer, 64, 10 + k);
    auto exact = pl_gradient_exact(m.layer, m.params, data);
    TrainConfig cfg;
    cfg.mc_steps = 200;
    cfg.weight_penalty = 0.0;
    auto chains = PersistentChains::init(m.layer, m.params, data, 1000, 20 + k);
    CRBMParams avg = CRBMParams::zeros(m.layer);
    const int steps = 100;
    PcdResult last;
    for (int s = 0; s < steps; ++s) {
      last = pcd_step(m.layer, m.params, data, chains, cfg, static_cast<std::uint64_t>(s));
      avg += last.gradient;
    }
    avg = (1.0 / steps) * avg;
    auto d = (avg.flatten() - exact.flatten()).cwiseAbs().maxCoeff();
    worst = std::max(worst, d);
    auto adv = adversary_gradient(m.layer, m.params, last.data_hidden, chains.batch.visible, last.model_hidden, 0.0);
    auto beam = beam_gradient(last.gradient, adv.gradient, 0.0).flatten();
    auto pl = last.gradient.flatten();
    bitwise = bitwise && beam.size() == pl.size() &&
              std::memcmp(beam.data(), pl.data(), sizeof(double) * static_cast<std::size_t>(pl.size())) == 0;
  }
  o.pass = worst <= 2e-2 && bitwise;
  o.detail = "mc_steps 200, 100-step average; max |PCD - exact| " + fmt(worst) + "; BEAM(λ=0) bitwise " +
             (bitwise ? "equal" : "DIFFERENT");
  return o;
}

// ---- 3 ------------------------------------------------------------------------

Outcome free_energy_identity() {
  double worst = 0;
  for (const auto& m : tiny_models()) {
    auto table = exact_enumerate(m.layer, m.params);
    for (std::uint64_t x = 0; x < (1ULL << m.layer.visible()); ++x) {
      double unnormalized = 0;
      for (std::uint64_t h = 0; h < (1ULL << m.layer.hidden); ++h)
        unnormalized += table.joint(x, h) * std::exp(table.log_partition);
      double f = std::exp(-free_energy(m.layer, m.params, EnumerationTable::bits(x, m.layer.visible())));
      worst = std::max(worst, std::abs(f / unnormalized - 1.0));
    }
  }
  return {worst <= 1e-10, "max relative error " + fmt(worst, 3)};
}

// ---- 4 and 5 ----------------------------------------------------------------------

// Training settings of the recovery run.
constexpr int kSubjects = 2000;
constexpr int kVisits = 7;
constexpr int kTwinMonths = 18;

TrainConfig recovery_config(std::uint64_t seed) {
  TrainConfig c;
  c.batch_size = 100;
  c.epochs = 600;
  c.learning_rate = 0.002;
  c.hidden_units = 64;
  c.mc_steps = 25;
  c.seed = seed;
  return c;
}

struct RecoveryRun {
  SyntheticCohort cohort;
  DatasetSplit split;
  std::vector<TwinSet> twins;
  double train_seconds = 0, total_seconds = 0;
};

RecoveryRun recovery_run() {
  auto t0 = Clock::now();
  RecoveryRun r;
  r.cohort = generate_cohort(default_synth_config(kSubjects, kVisits), 2024);
  r.split = split_dataset(r.cohort.data, defaults::split_ratios(), 11);
  auto fit = merge_datasets(r.split.train, r.split.val);
  auto m3 = train_component(fit, ModelKind::three_month, recovery_config(1));
  auto m6 = train_component(fit, ModelKind::six_month, recovery_config(2));
  r.train_seconds = seconds_since(t0);
  auto composite = assemble_composite(m3, m6, r.cohort.data.schema);
  r.twins = generate_twins_for(composite, r.split.test.subjects, defaults::kTwinCount, kTwinMonths, 7);
  r.total_seconds = seconds_since(t0);
  return r;
}

Outcome synthetic_recovery(const RecoveryRun& r) {
  const auto& test = r.split.test;
  auto t0 = Clock::now();
  auto cohort = twin_cohort(test.schema, 3, r.twins, 0);
  auto rep = moment_report(test, cohort);
  std::vector<double> sds;
  for (const auto& p : rep.family("sd").points) sds.push_back(p.data);
  const double unit = stats::median(sds);
  std::ostringstream d;
  bool pass = true;
  for (const char* name : {"mean", "sd"}) {
    const auto& f = rep.family(name);
    double icpt = f.intercept / unit;
    bool ok = f.slope >= 0.9 && f.slope <= 1.1 && std::abs(icpt) <= 0.1;
    pass = pass && ok;
    d << name << " slope " << fmt(f.slope) << " intercept " << fmt(icpt, 3) << (ok ? "" : " (out)") << "; ";
  }
  double r2 = rep.family("corr").r2;
  pass = pass && r2 >= 0.8;
  d << "corr R2 " << fmt(r2) << "; ";

  TwinComparison cmp(test, r.twins);
  auto eps = endpoints_from_json(default_synth_endpoints());
  auto prog = endpoint_progression(cmp, eps);
  std::size_t inside = 0, total = 0;
  std::string misses;
  for (const auto& p : prog.points) {
    if (p.month == 0) continue;
    double truth = true_mean_change(r.cohort.truth, find_endpoint(eps, p.endpoint).components, p.month / 3);
    bool ok = std::abs(p.model_mean - truth) <= 1.96 * p.data_se;
    ++total;
    inside += ok;
    if (!ok) misses += " " + p.endpoint + "@" + std::to_string(p.month);
  }
  pass = pass && inside == total;
  double total_seconds = r.total_seconds + seconds_since(t0);
  pass = pass && total_seconds <= 1800;
  d << "progression inside CI at " << inside << "/" << total << " visits";
  if (!misses.empty()) d << " (outside:" << misses << ")";
  d << "; runtime " << fmt(total_seconds, 4) << "s";
  return {pass, d.str()};
}

Outcome discriminator_floor(const RecoveryRun& r) {
  TwinComparison cmp(r.split.test, r.twins);
  DiscriminatorOptions opt;
  opt.trials = defaults::kTwinCount;
  opt.seed = 3;
  auto rep = discriminator_probe(cmp, opt);
  bool pass = true;
  std::ostringstream d;
  d << "100 trials;";
  for (const auto& c : rep.cells) {
    if (c.features != "levels") continue;
    bool ok = c.accuracy >= 0.45 && c.accuracy <= 0.60;
    pass = pass && ok;
    d << " m" << c.month << " " << fmt(c.accuracy, 3);
  }
  d << " (differences:";
  for (const auto& c : rep.cells)
    if (c.features == "differences") d << " " << fmt(c.accuracy, 3);
  d << ")";
  return {pass, d.str()};
}

// ---- 6 ------------------------------------------------------------------------

Outcome calibration_self_test() {
  // A small composite model generates both the observations (twin 0) and
  // 100 twins per subject; 5 variables x 4 follow-up visits = 20 cells.
  auto base = generate_cohort(default_synth_config(300, 5), 5).data;
  auto untrained = [&](ModelKind k, std::uint64_t seed) {
    auto layer = component_layer(base.schema, k, 8);
    CRBMParams p = CRBMParams::zeros(layer);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = rng.normal(0, 0.15);
    for (Eigen::Index i = 0; i < p.hidden_bias.size(); ++i) p.hidden_bias[i] = rng.normal(0, 0.3);
    return Model{layer, compute_stats(base).subset(layer.variables), p};
  };
  auto composite = assemble_composite(untrained(ModelKind::three_month, 1), untrained(ModelKind::six_month, 2),
                                      base.schema);
  std::vector<std::size_t> vars;
  for (const char* name : {"cog1", "cog2", "cog3", "cog4", "func1"}) vars.push_back(require_variable(base.schema, name));
  int good_runs = 0;
  std::vector<std::size_t> flags;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sets = generate_twins_for(composite, base.subjects, 101, 12, 1000 + seed, {10});
    PanelDataset data{base.schema, {}, 3, 5};
    for (auto& s : sets) {
      data.subjects.push_back(s.twins.front());
      data.subjects.back().id = s.source_subject_id;
      s.twins.erase(s.twins.begin());
    }
    TwinComparison cmp(data, sets);
    auto rep = calibration_report(cmp, vars);
    if (rep.cells.size() != 20) return {false, "grid has " + std::to_string(rep.cells.size()) + " cells"};
    flags.push_back(rep.flagged());
    good_runs += rep.flagged() <= 1;
  }
  std::ostringstream d;
  d << good_runs << "/20 runs with <= 1 flag; flags per run:";
  for (auto f : flags) d << ' ' << f;
  return {good_runs >= 19, d.str()};
}

// ---- 7 ------------------------------------------------------------------------

std::size_t brute_minimax(const MetricTable& t) {
  auto worst = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    std::vector<int> out;
    for (auto i : rows) {
      int w = 0;
      for (auto c : cols) {
        int rank = 1;
        for (auto j : rows) {
          double a = t.rows[j].values[c], b = t.rows[i].values[c];
          rank += t.columns[c].higher_better ? (a > b) : (a < b);
        }
        w = std::max(w, rank);
      }
      out.push_back(w);
    }
    return out;
  };
  auto best_first = [&](const std::vector<std::size_t>& rows, const std::vector<int>& s) {
    std::vector<std::tuple<int, std::vector<double>, std::size_t>> v;
    for (std::size_t k = 0; k < rows.size(); ++k) v.emplace_back(s[k], t.rows[rows[k]].key, rows[k]);
    std::sort(v.begin(), v.end());
    std::vector<std::size_t> out;
    for (const auto& x : v) out.push_back(std::get<2>(x));
    return out;
  };
  std::vector<std::size_t> all, cols, perf;
  for (std::size_t i = 0; i < t.rows.size(); ++i) all.push_back(i);
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    cols.push_back(c);
    if (t.columns[c].performance) perf.push_back(c);
  }
  auto first = best_first(all, worst(all, cols));
  std::size_t keep = static_cast<std::size_t>(std::ceil(t.rows.size() / 4.0));
  std::vector<std::size_t> kept(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(keep));
  return best_first(kept, worst(kept, perf.empty() ? cols : perf)).front();
}

Outcome minimax_oracle() {
  Rng rng(4242);
  int agree = 0, ties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MetricTable t;
    std::size_t ncol = 1 + rng.next() % 9, nrow = 1 + rng.next() % 50;
    for (std::size_t c = 0; c < ncol; ++c)
      t.columns.push_back({"m" + std::to_string(c), rng.uniform() < 0.5, rng.uniform() < 0.5});
    bool coarse = trial % 2 == 0;
    std::set<std::vector<double>> keys;
    while (t.rows.size() < nrow) {
      std::vector<double> key{static_cast<double>(rng.next() % 5), static_cast<double>(rng.next() % 5),
                              static_cast<double>(rng.next() % 5)};
      if (!keys.insert(key).second) continue;
      MetricRow row{key, {}};
      for (std::size_t c = 0; c < ncol; ++c)
        row.values.push_back(coarse ? static_cast<double>(rng.next() % 3) : rng.uniform());
      t.rows.push_back(row);
    }
    auto sel = minimax_select(t);
    agree += sel.row == brute_minimax(t);
    ties += sel.tie_broken;
  }
  return {agree == 100, std::to_string(agree) + "/100 tables agree (" + std::to_string(ties) + " decided by ties)"};
}

// ---- 8 ------------------------------------------------------------------------

double plain_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Outcome theil_sen_oracle() {
  Rng rng(88);
  int checked = 0, exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 2 + rng.next() % 19;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = trial % 2 ? static_cast<double>(rng.next() % 6) : rng.normal();
      y[i] = trial % 2 ? static_cast<double>(rng.next() % 9) : 0.5 * x[i] + rng.normal();
    }
    std::vector<double> slopes;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (x[i] != x[j]) slopes.push_back((y[j] - y[i]) / (x[j] - x[i]));
    ++checked;
    if (slopes.empty()) {
      try {
        stats::theil_sen(x, y);
      } catch (const FitError&) {
        ++exact;
      }
      continue;
    }
    double b = plain_median(slopes);
    std::vector<double> res;
    for (std::size_t i = 0; i < n; ++i) res.push_back(y[i] - b * x[i]);
    double a = plain_median(res);
    auto fit = stats::theil_sen(x, y);
    exact += fit.slope == b && fit.intercept == a;
  }
  return {exact == checked, std::to_string(exact) + "/" + std::to_string(checked) + " point sets exactly equal or rejected as degenerate"};
}

// ---- 9 ------------------------------------------------------------------------

Outcome packaged_constants() {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  check(defaults::kTwinCount == 100, "twin count");
  auto r = defaults::split_ratios();
  check(r.train == 0.5 && r.val == 0.2 && r.test == 0.3, "split");
  auto axis = [](const GridSpec& g, const std::string& name) {
    for (const auto& a : g.axes)
      if (a.name == name) return a.values;
    return std::vector<double>{};
  };
  auto g3 = defaults::grid(ModelKind::three_month), g6 = defaults::grid(ModelKind::six_month);
  check(axis(g3, "batch_size") == std::vector<double>{400, 600, 800}, "3mo batch");
  check(axis(g3, "learning_rate") == std::vector<double>{0.002, 0.004, 0.008, 0.012, 0.016}, "3mo lr");
  check(axis(g3, "beta_std") == std::vector<double>{0.15, 0.30, 0.45}, "3mo beta");
  check(axis(g3, "adversary_weight") == std::vector<double>{0, 0.15, 0.30}, "3mo adversary");
  check(axis(g3, "hidden_units") == std::vector<double>{65, 130, 195}, "3mo hidden");
  check(axis(g6, "batch_size") == std::vector<double>{100, 200, 400}, "6mo batch");
  check(axis(g6, "learning_rate") == std::vector<double>{0.004, 0.008, 0.012, 0.016, 0.024, 0.032}, "6mo lr");
  check(axis(g6, "beta_std") == std::vector<double>{0.15, 0.30, 0.45}, "6mo beta");
  check(axis(g6, "adversary_weight") == std::vector<double>{0, 0.15, 0.30}, "6mo adversary");
  check(axis(g6, "hidden_units") == std::vector<double>{32, 64}, "6mo hidden");
  auto s3 = defaults::selected_config(ModelKind::three_month), s6 = defaults::selected_config(ModelKind::six_month);
  auto imp = imputer_config();
  check(s3.batch_size == 400 && s3.epochs == 1000 && s3.learning_rate == 0.016 && s3.beta_std == 0.15 &&
            s3.weight_penalty == 0.001 && s3.mc_steps == 25 && s3.adversary_weight == 0.30 && s3.hidden_units == 65,
        "3mo selection");
  check(s6.batch_size == 100 && s6.epochs == 1000 && s6.learning_rate == 0.032 && s6.beta_std == 0.15 &&
            s6.weight_penalty == 0.001 && s6.mc_steps == 25 && s6.adversary_weight == 0.0 && s6.hidden_units == 32,
        "6mo selection");
  check(imp.batch_size == 500 && imp.epochs == 1000 && imp.learning_rate == 0.02 && imp.beta_std == 0.15 &&
            imp.weight_penalty == 0.001 && imp.mc_steps == 25 && imp.adversary_weight == 0.30 && imp.hidden_units == 32,
        "imputer settings");
  check(selection_columns(ModelKind::three_month).size() == 7, "3mo metric count");
  check(selection_columns(ModelKind::six_month).size() == 9, "6mo metric count");
  check(bonferroni_threshold(defaults::kCalibrationVariables, defaults::kCalibrationVisits) == 0.05 / 126,
        "Bonferroni");
  std::string d = bad.empty() ? "all constants match" : "mismatch:";
  for (const auto& b : bad) d += " " + b;
  return {bad.empty(), d};
}

// ---- 10 -----------------------------------------------------------------------

int run_cli(const std::string& args) {
  std::string cmd = std::string(CRBM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "crbm_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "cfg.json") << R"({"batch_size": 50, "epochs": 3, "mc_steps": 3, "hidden_units": 6})";
  std::ofstream(root / "grid.json") << R"({"learning_rate": [0.01, 0.03], "adversary_weight": [0, 0.3]})";
  for (const char* rep : {"a", "b"}) {
    auto d = root / rep;
    auto q = [&](const char* sub) { return (d / sub).string(); };
    std::string schema = " --schema " + q("synth/schema.json");
    std::string cfg = " --config " + (root / "cfg.json").string();
    std::vector<std::string> cmds{
        "synth --subjects 200 --visits 7 --seed 3 --out " + q("synth"),
        "split --data " + q("synth/cohort.csv") + schema + " --seed 4 --out " + q("split"),
        "train --data " + q("split/train.csv") + schema + cfg + " --model 3mo --imputer-epochs 3 --seed 5 --out " +
            q("m3"),
        "train --data " + q("split/train.csv") + schema + cfg + " --model 6mo --seed 6 --out " + q("m6"),
        "sweep --train " + q("split/train.csv") + " --val " + q("split/val.csv") + schema + cfg + " --grid " +
            (root / "grid.json").string() + " --endpoints " + q("synth/endpoints.json") +
            " --model 3mo --imputer-epochs 3 --eval-mc-steps 3 --workers 2 --seed 7 --out " + q("sweep"),
        "twins --data " + q("split/test.csv") + schema + " --model3 " + q("m3/model_3mo.crbm") + " --model6 " +
            q("m6/model_6mo.crbm") + " --n 5 --mc-steps 5 --seed 8 --out " + q("twins"),
        "evaluate --data " + q("split/test.csv") + schema + " --twins " + q("twins/twins.csv") + " --endpoints " +
            q("synth/endpoints.json") + " --trials 5 --seed 9 --out " + q("eval")};
    for (const auto& c : cmds)
      if (int code = run_cli(c); code != 0)
        return {false, "command failed with exit " + std::to_string(code) + ": " + c.substr(0, c.find(' '))};
  }
  std::size_t compared = 0, equal = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    auto other = root / "b" / fs::relative(e.path(), root / "a");
    ++compared;
    equal += fs::exists(other) && slurp(e.path()) == slurp(other);
  }
  return {compared > 0 && equal == compared,
          std::to_string(equal) + "/" + std::to_string(compared) + " CSV files byte-identical across 7 commands"};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << n << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << " ("
              << fmt(seconds_since(t0), 3) << "s)" << std::endl;
  };
  report(1, "Gibbs sampler vs enumeration", gibbs_vs_enumeration);
  report(2, "PCD gradient accuracy", gradient_accuracy);
  report(3, "free-energy identity", free_energy_identity);
  std::optional<RecoveryRun> run;
  report(4, "synthetic recovery", [&] {
    run = recovery_run();
    return synthetic_recovery(*run);
  });
  report(5, "discriminator floor", [&] {
    if (!run) return Outcome{false, "recovery run unavailable"};
    return discriminator_floor(*run);
  });
  report(6, "calibration self-test", calibration_self_test);
  report(7, "minimax oracle", minimax_oracle);
  report(8, "Theil-Sen oracle", theil_sen_oracle);
  report(9, "packaged constants", packaged_constants);
  report(10, "CLI determinism", cli_determinism);
  return failures == 0 ? 0 : 1;
}
