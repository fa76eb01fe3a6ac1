// crbm: command-line driver for data synthesis, splitting, training, sweeps,
// twin generation and evaluation.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "crbm/crbm.hpp"

namespace fs = std::filesystem;
using namespace crbm;
using json = nlohmann::ordered_json;

namespace {

/// Bad flags, files or data: exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + p.string() + "'");
  out << s;
}

template <class F>
void write_stream(const fs::path& p, F&& f) {
  std::ostringstream o;
  f(o);
  write_text(p, o.str());
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + dir + "'");
  fs::path probe = fs::path(dir) / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

class Manifest {
 public:
  explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kVersion;
    j_["model_container_version"] = kContainerVersion;
    j_["config"] = json::object();
    j_["seeds"] = json::object();
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    j_["warnings"] = json::array();
  }
  json& config() { return j_["config"]; }
  void seed(const std::string& k, std::uint64_t s) { j_["seeds"][k] = s; }
  void input(const std::string& k, const std::string& path) { j_["inputs"][k] = path; }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }
  void warn(const std::string& w) {
    std::cerr << "warning: " << w << '\n';
    j_["warnings"].push_back(w);
  }
  void write(const fs::path& dir) {
    j_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

Schema schema_at(const std::string& path) {
  require_file(path, "schema");
  return load_schema(path);
}

PanelDataset panel_at(const std::string& path, const Schema& schema) {
  require_file(path, "dataset");
  return load_panel(path, schema);
}

Model model_at(const std::string& path) {
  require_file(path, "model file");
  return load_model(path);
}

EndpointSet endpoints_at(const std::string& path) {
  if (path.empty()) return standard_endpoints();
  return endpoints_from_json(read_json(path));
}

// ---- training flags ------------------------------------------------------------

struct TrainFlags {
  std::string config;
  std::optional<int> batch_size, epochs, mc_steps, hidden_units;
  std::optional<double> learning_rate, beta_std, weight_penalty, adversary_weight;

  void add(CLI::App* c) {
    c->add_option("--config", config, "JSON file with training options")->check(CLI::ExistingFile);
    c->add_option("--batch-size", batch_size);
    c->add_option("--epochs", epochs);
    c->add_option("--learning-rate", learning_rate);
    c->add_option("--beta-std", beta_std);
    c->add_option("--weight-penalty", weight_penalty);
    c->add_option("--mc-steps", mc_steps);
    c->add_option("--adversary-weight", adversary_weight);
    c->add_option("--hidden", hidden_units);
  }

  TrainConfig resolve(TrainConfig base) const {
    if (!config.empty()) {
      auto j = read_json(config);
      if (!j.is_object()) throw UsageError(config + ": expected a JSON object");
      auto merged = nlohmann::json::parse(to_json(base).dump());
      for (auto it = j.begin(); it != j.end(); ++it) merged[it.key()] = *it;
      base = train_config_from_json(merged);
    }
    if (batch_size) base.batch_size = *batch_size;
    if (epochs) base.epochs = *epochs;
    if (mc_steps) base.mc_steps = *mc_steps;
    if (hidden_units) base.hidden_units = *hidden_units;
    if (learning_rate) base.learning_rate = *learning_rate;
    if (beta_std) base.beta_std = *beta_std;
    if (weight_penalty) base.weight_penalty = *weight_penalty;
    if (adversary_weight) base.adversary_weight = *adversary_weight;
    base.validate();
    return base;
  }
};

std::optional<Model> imputer_for(const PanelDataset& ds, ModelKind k, const std::string& path,
                                 std::optional<int> epochs, std::uint64_t seed, Manifest& man,
                                 const fs::path& out) {
  if (k != ModelKind::three_month || !needs_imputer(ds)) return std::nullopt;
  if (!path.empty()) {
    man.input("imputer", path);
    return model_at(path);
  }
  auto cfg = imputer_config(stream_key(seed, {0x1a7ULL}));
  if (epochs) cfg.epochs = *epochs;
  man.config()["imputer"] = to_json(cfg);
  auto m = train_imputer(encode(ds, ds), cfg);
  save_model(m, (out / "imputer.crbm").string());
  man.output(out / "imputer.crbm");
  return m;
}

void write_log(const fs::path& p, const std::vector<EpochLog>& log) {
  write_stream(p, [&](std::ostream& o) {
    o << "epoch,recon_error,critic_accuracy,grad_norm\n";
    for (const auto& e : log)
      o << e.epoch << ',' << csv::number(e.recon_error) << ',' << csv::number(e.critic_accuracy) << ','
        << csv::number(e.grad_norm) << '\n';
  });
}

// ---- commands -------------------------------------------------------------------

struct SynthArgs {
  int subjects = 500, visits = 7;
  std::uint64_t seed = 0;
  std::optional<double> drift, dropout;
  std::string out;
};

void cmd_synth(const SynthArgs& a) {
  if (a.subjects < 1) throw UsageError("--subjects must be at least 1");
  if (a.visits < 1) throw UsageError("--visits must be at least 1");
  auto dir = prepare_out(a.out);
  Manifest man("synth");
  auto cfg = default_synth_config(a.subjects, a.visits, a.seed);
  if (a.drift) cfg.drift = *a.drift;
  if (a.dropout) cfg.dropout = *a.dropout;
  try {
    cfg.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }
  auto coh = generate_cohort(cfg, a.seed);
  save_panel(coh.data, (dir / "cohort.csv").string());
  save_schema(coh.data.schema, (dir / "schema.json").string());
  write_text(dir / "ground_truth.json", to_json(coh.truth).dump() + "\n");
  write_text(dir / "endpoints.json", default_synth_endpoints().dump(2) + "\n");
  for (auto f : {"cohort.csv", "schema.json", "ground_truth.json", "endpoints.json"}) man.output(dir / f);
  man.config() = {{"subjects", a.subjects}, {"visits", a.visits}, {"drift", cfg.drift}, {"dropout", cfg.dropout}};
  man.seed("cohort", a.seed);
  man.write(dir);
}

struct SplitArgs {
  std::string data, schema, out;
  std::vector<double> ratios{0.5, 0.2, 0.3};
  std::uint64_t seed = 0;
};

void cmd_split(const SplitArgs& a) {
  if (a.ratios.size() != 3) throw UsageError("--ratios needs three values");
  SplitRatios r{a.ratios[0], a.ratios[1], a.ratios[2]};
  auto schema = schema_at(a.schema);
  auto ds = panel_at(a.data, schema);
  auto dir = prepare_out(a.out);
  Manifest man("split");
  auto sp = split_dataset(ds, r, a.seed);
  save_panel(sp.train, (dir / "train.csv").string());
  save_panel(sp.val, (dir / "val.csv").string());
  save_panel(sp.test, (dir / "test.csv").string());
  for (auto f : {"train.csv", "val.csv", "test.csv"}) man.output(dir / f);
  for (const auto& w : sp.warnings) man.warn(w);
  man.config() = {{"ratios", a.ratios},
                  {"subjects", {sp.train.subjects.size(), sp.val.subjects.size(), sp.test.subjects.size()}}};
  man.input("data", a.data);
  man.input("schema", a.schema);
  man.seed("split", a.seed);
  man.write(dir);
}

struct TrainArgs {
  std::string data, schema, model = "3mo", imputer, out;
  TrainFlags flags;
  std::optional<int> imputer_epochs;
  std::uint64_t seed = 0;
};

void cmd_train(const TrainArgs& a) {
  auto kind = parse_model_kind(a.model);
  auto cfg = a.flags.resolve(TrainConfig{});
  cfg.seed = a.seed;
  auto schema = schema_at(a.schema);
  auto ds = panel_at(a.data, schema);
  auto dir = prepare_out(a.out);
  Manifest man("train");
  man.input("data", a.data);
  man.input("schema", a.schema);
  man.seed("train", a.seed);
  auto imp = imputer_for(ds, kind, a.imputer, a.imputer_epochs, a.seed, man, dir);
  std::vector<EpochLog> log;
  auto m = train_component(ds, kind, cfg, imp ? &*imp : nullptr, &log);
  auto name = "model_" + to_string(kind) + ".crbm";
  save_model(m, (dir / name).string());
  write_log(dir / "training_log.csv", log);
  man.output(dir / name);
  man.output(dir / "training_log.csv");
  man.config()["model"] = to_string(kind);
  man.config()["train"] = to_json(cfg);
  man.write(dir);
}

struct SweepArgs {
  std::string train, val, schema, model = "3mo", grid, endpoints, imputer, out;
  TrainFlags flags;
  std::optional<int> imputer_epochs;
  int eval_mc_steps = defaults::kMcSteps;
  int bins = 20;
  unsigned workers = 1;
  std::uint64_t seed = 0;
};

void cmd_sweep(const SweepArgs& a) {
  auto kind = parse_model_kind(a.model);
  GridSpec grid = a.grid.empty() ? defaults::grid(kind) : grid_from_json(read_json(a.grid));
  auto base = a.flags.resolve(defaults::base_config());
  auto schema = schema_at(a.schema);
  auto train = panel_at(a.train, schema);
  auto val = panel_at(a.val, schema);
  auto eps = endpoints_at(a.endpoints);
  auto dir = prepare_out(a.out);
  Manifest man("sweep");
  man.input("train", a.train);
  man.input("val", a.val);
  man.input("schema", a.schema);
  man.seed("sweep", a.seed);
  auto imp = imputer_for(merge_datasets(train, val), kind, a.imputer, a.imputer_epochs, a.seed, man, dir);
  SweepOptions opt;
  opt.kind = kind;
  opt.base = base;
  opt.endpoints = eps;
  opt.seed = a.seed;
  opt.workers = a.workers;
  opt.mc_steps = a.eval_mc_steps;
  opt.imputer = imp ? &*imp : nullptr;
  auto res = run_sweep(grid, train, val, opt);
  for (const auto& w : res.warnings) man.warn(w);
  write_stream(dir / "metrics.csv", [&](std::ostream& o) { write_metric_table(res, o); });
  auto rep = sweep_report(res.table, res.selection.row, a.bins);
  write_stream(dir / "sweep_report.csv", [&](std::ostream& o) { write_sweep_report(rep, o); });
  for (std::size_t c = 0; c < rep.size(); ++c) {
    auto name = "metric_" + std::to_string(c) + ".svg";
    svg::save((dir / name).string(), svg::histogram(rep[c].column.name, rep[c].edges, rep[c].counts, rep[c].selected));
    man.output(dir / name);
  }
  auto name = "model_" + to_string(kind) + ".crbm";
  save_model(res.model, (dir / name).string());
  for (const auto& f : {std::string("metrics.csv"), std::string("sweep_report.csv"), name}) man.output(dir / f);
  man.config()["model"] = to_string(kind);
  man.config()["grid"] = json::parse(to_json(grid).dump());
  man.config()["base"] = json::parse(to_json(base).dump());
  man.config()["selected_row"] = res.selected;
  man.config()["selected"] = json::parse(to_json(res.selected_config).dump());
  man.config()["workers"] = a.workers;
  man.write(dir);
}

struct TwinsArgs {
  std::string data, schema, model3, model6, out;
  int n = defaults::kTwinCount;
  int months = 18;
  int mc_steps = defaults::kMcSteps;
  std::uint64_t seed = 0;
};

void cmd_twins(const TwinsArgs& a) {
  if (a.n < 1) throw UsageError("--n must be at least 1");
  if (a.months < 0 || a.months % 6 != 0) throw UsageError("--months must be a non-negative multiple of 6");
  auto schema = schema_at(a.schema);
  auto m3 = model_at(a.model3);
  auto m6 = model_at(a.model6);
  auto ds = panel_at(a.data, schema);
  auto dir = prepare_out(a.out);
  Manifest man("twins");
  auto c = assemble_composite(m3, m6, schema);
  GenerationOptions opt;
  opt.mc_steps = a.mc_steps;
  auto sets = generate_twins_for(c, ds.subjects, a.n, a.months, a.seed, opt);
  write_stream(dir / "twins.csv", [&](std::ostream& o) { write_twins(schema, 3, sets, o); });
  man.output(dir / "twins.csv");
  man.input("data", a.data);
  man.input("schema", a.schema);
  man.input("model3", a.model3);
  man.input("model6", a.model6);
  man.seed("twins", a.seed);
  man.config() = {{"n", a.n}, {"months", a.months}, {"mc_steps", a.mc_steps}};
  man.write(dir);
}

struct EvaluateArgs {
  std::string data, schema, twins, endpoints, out;
  std::size_t trials = defaults::kTwinCount;
  std::uint64_t seed = 0;
};

svg::Plot calibration_plot(const CalibrationReport& r) {
  svg::Plot p{"Calibration of phi", "cell", "mean +/- sd", {}, {}, false, 720, 360};
  svg::Series ok{"not flagged", {}, {}, {}, "#1f77b4", false}, bad{"flagged", {}, {}, {}, "#d62728", false};
  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    auto& s = r.cells[i].flagged ? bad : ok;
    s.x.push_back(static_cast<double>(i));
    s.y.push_back(r.cells[i].mean);
    s.err.push_back(r.cells[i].sd);
  }
  p.series = {ok, bad};
  return p;
}

svg::Plot moment_plot(const MomentFamily& f) {
  svg::Plot p{f.name + " (" + f.method + ")", "data", "model", {}, {}, true, 360, 360};
  svg::Series s{f.name, {}, {}, {}, "#1f77b4", false};
  for (const auto& pt : f.points) {
    s.x.push_back(pt.data);
    s.y.push_back(pt.model);
  }
  p.series = {s};
  return p;
}

svg::Plot progression_plot(const ProgressionReport& r, const std::string& endpoint) {
  svg::Plot p{endpoint + " change from baseline", "month", "mean change", {}, {}, false, 480, 360};
  svg::Series d{"data", {}, {}, {}, "#333333", true}, m{"twins", {}, {}, {}, "#1f77b4", true};
  for (const auto& pt : r.points) {
    if (pt.endpoint != endpoint || !pt.stratum.empty()) continue;
    d.x.push_back(pt.month);
    d.y.push_back(pt.data_mean);
    d.err.push_back(1.96 * pt.data_se);
    m.x.push_back(pt.month);
    m.y.push_back(pt.model_mean);
    m.err.push_back(1.96 * pt.model_se);
  }
  p.series = {d, m};
  return p;
}

svg::Plot discriminator_plot(const DiscriminatorReport& r) {
  svg::Plot p{"Discriminator accuracy", "month", "accuracy", {}, {}, false, 480, 360};
  svg::Series lv{"levels", {}, {}, {}, "#1f77b4", true}, df{"differences", {}, {}, {}, "#ff7f0e", true};
  for (const auto& c : r.cells) {
    auto& s = c.features == "levels" ? lv : df;
    s.x.push_back(c.month);
    s.y.push_back(c.accuracy);
    s.err.push_back((c.ci_high - c.ci_low) / 2);
  }
  p.series = {lv, df};
  return p;
}

void cmd_evaluate(const EvaluateArgs& a) {
  auto schema = schema_at(a.schema);
  auto data = panel_at(a.data, schema);
  require_file(a.twins, "twins file");
  auto sets = load_twins(a.twins, schema);
  auto eps = endpoints_at(a.endpoints);
  validate_endpoints(eps, schema);
  auto dir = prepare_out(a.out);
  Manifest man("evaluate");
  man.input("data", a.data);
  man.input("schema", a.schema);
  man.input("twins", a.twins);
  man.seed("discriminator", a.seed);
  TwinComparison cmp(data, sets);
  auto out = [&](const std::string& name, auto&& f) {
    write_stream(dir / name, f);
    man.output(dir / name);
  };
  auto plot = [&](const std::string& name, const svg::Plot& p) {
    svg::save((dir / name).string(), svg::render(p));
    man.output(dir / name);
  };

  auto cal = calibration_report(cmp);
  for (const auto& n : cal.notes) man.warn(n);
  out("calibration.csv", [&](std::ostream& o) { write_csv(cal, o); });
  plot("calibration.svg", calibration_plot(cal));

  auto cohort = twin_cohort(schema, 3, sets, 0);
  auto mom = moment_report(data, cohort);
  out("moments.csv", [&](std::ostream& o) { write_csv(mom, o); });
  out("moment_fits.csv", [&](std::ostream& o) { write_fit_csv(mom, o); });
  for (const auto& f : mom.families) plot("moments_" + f.name + ".svg", moment_plot(f));

  DiscriminatorOptions dopt;
  dopt.trials = std::min(a.trials, cmp.twin_count());
  dopt.seed = a.seed;
  try {
    auto disc = discriminator_probe(cmp, dopt);
    out("discriminator.csv", [&](std::ostream& o) { write_csv(disc, o); });
    out("discriminator_coefficients.csv", [&](std::ostream& o) { write_coefficients_csv(disc, o); });
    plot("discriminator.svg", discriminator_plot(disc));
  } catch (const MetricError& e) {
    man.warn(std::string("discriminator skipped: ") + e.what());
  }

  std::vector<double> cuts;
  std::string strat;
  try {
    cuts = tertile_cuts(data, eps.front());
    strat = eps.front().name;
  } catch (const MetricError& e) {
    man.warn(std::string("stratification skipped: ") + e.what());
  }
  auto prog = endpoint_progression(cmp, eps, cuts, strat);
  for (const auto& n : prog.notes) man.warn(n);
  out("progression.csv", [&](std::ostream& o) { write_csv(prog, o); });
  for (const auto& e : eps) plot("progression_" + e.name + ".svg", progression_plot(prog, e.name));

  std::vector<SubjectFit> fits;
  for (const auto& e : eps)
    for (int month : cmp.follow_up_months()) {
      if (month % 6 != 0) continue;
      try {
        fits.push_back(subject_level_fit(cmp, e, month));
      } catch (const MetricError& err) {
        man.warn(e.name + " at month " + std::to_string(month) + ": " + err.what());
      }
    }
  out("subject_fits.csv", [&](std::ostream& o) { write_csv(fits, o); });

  auto marg = marginal_moment_tests(data, cohort);
  for (const auto& n : marg.notes) man.warn(n);
  out("marginal.csv", [&](std::ostream& o) { write_csv(marg, o); });

  man.config() = {{"trials", dopt.trials},
                  {"twins_per_subject", cmp.twin_count()},
                  {"calibration_threshold", cal.threshold},
                  {"calibration_flagged", cal.flagged()},
                  {"endpoints", json::parse(to_json(eps).dump())}};
  man.write(dir);
}

int run(int argc, char** argv) {
  CLI::App app{"Conditional RBM models of panel data"};
  app.require_subcommand(1);
  app.set_version_flag("--version",
                       std::string("crbm ") + kVersion + " (model container v" + std::to_string(kContainerVersion) + ")");
  unsigned default_workers = std::max(1u, std::thread::hardware_concurrency());

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic cohort with known ground truth");
  c_synth->add_option("--subjects", sy.subjects);
  c_synth->add_option("--visits", sy.visits, "Visits at 3-month cadence");
  c_synth->add_option("--drift", sy.drift);
  c_synth->add_option("--dropout", sy.dropout);
  c_synth->add_option("--seed", sy.seed);
  c_synth->add_option("--out", sy.out)->required();

  SplitArgs sp;
  auto* c_split = app.add_subcommand("split", "Stratified train/validation/test split");
  c_split->add_option("--data", sp.data)->required();
  c_split->add_option("--schema", sp.schema)->required();
  c_split->add_option("--ratios", sp.ratios)->delimiter(',');
  c_split->add_option("--seed", sp.seed);
  c_split->add_option("--out", sp.out)->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train one component model");
  c_train->add_option("--data", tr.data)->required();
  c_train->add_option("--schema", tr.schema)->required();
  c_train->add_option("--model", tr.model, "3mo or 6mo");
  c_train->add_option("--imputer", tr.imputer, "Existing imputer model");
  c_train->add_option("--imputer-epochs", tr.imputer_epochs);
  c_train->add_option("--seed", tr.seed);
  c_train->add_option("--out", tr.out)->required();
  tr.flags.add(c_train);

  SweepArgs sw;
  sw.workers = default_workers;
  auto* c_sweep = app.add_subcommand("sweep", "Grid search with minimax selection");
  c_sweep->add_option("--train", sw.train)->required();
  c_sweep->add_option("--val", sw.val)->required();
  c_sweep->add_option("--schema", sw.schema)->required();
  c_sweep->add_option("--model", sw.model, "3mo or 6mo");
  c_sweep->add_option("--grid", sw.grid, "Grid JSON (default: built-in grid)")->check(CLI::ExistingFile);
  c_sweep->add_option("--endpoints", sw.endpoints)->check(CLI::ExistingFile);
  c_sweep->add_option("--imputer", sw.imputer);
  c_sweep->add_option("--imputer-epochs", sw.imputer_epochs);
  c_sweep->add_option("--eval-mc-steps", sw.eval_mc_steps);
  c_sweep->add_option("--bins", sw.bins);
  c_sweep->add_option("--workers", sw.workers)->check(CLI::PositiveNumber);
  c_sweep->add_option("--seed", sw.seed);
  c_sweep->add_option("--out", sw.out)->required();
  sw.flags.add(c_sweep);

  TwinsArgs tw;
  auto* c_twins = app.add_subcommand("twins", "Generate digital twins from baseline records");
  c_twins->add_option("--data", tw.data)->required();
  c_twins->add_option("--schema", tw.schema)->required();
  c_twins->add_option("--model3", tw.model3)->required();
  c_twins->add_option("--model6", tw.model6)->required();
  c_twins->add_option("--n", tw.n, "Twins per subject");
  c_twins->add_option("--months", tw.months);
  c_twins->add_option("--mc-steps", tw.mc_steps);
  c_twins->add_option("--seed", tw.seed);
  c_twins->add_option("--out", tw.out)->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Compare twins with observed data");
  c_eval->add_option("--data", ev.data)->required();
  c_eval->add_option("--schema", ev.schema)->required();
  c_eval->add_option("--twins", ev.twins)->required();
  c_eval->add_option("--endpoints", ev.endpoints)->check(CLI::ExistingFile);
  c_eval->add_option("--trials", ev.trials);
  c_eval->add_option("--seed", ev.seed);
  c_eval->add_option("--out", ev.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_synth) cmd_synth(sy);
    else if (*c_split) cmd_split(sp);
    else if (*c_train) cmd_train(tr);
    else if (*c_sweep) cmd_sweep(sw);
    else if (*c_twins) cmd_twins(tw);
    else if (*c_eval) cmd_evaluate(ev);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const AssemblyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
