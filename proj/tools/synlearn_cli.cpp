// Command-line front end: batch entry points over the library. Every command
// is deterministic given (config, seed) and writes its artifacts under --out.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "synlearn/dgp.hpp"
#include "synlearn/effects.hpp"
#include "synlearn/inference.hpp"
#include "synlearn/io.hpp"

namespace fs = std::filesystem;
using namespace synlearn;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> panel_csv;
  std::optional<int> t0;
  std::optional<int> m;
};

Json load_config(const CliOptions& opt) {
  Json cfg = Json::object();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + opt.config_path);
    in >> cfg;
  }
  if (opt.seed) cfg["seed"] = *opt.seed;
  if (opt.threads) cfg["threads"] = *opt.threads;
  if (opt.panel_csv) {
    cfg["panel"]["csv"] = *opt.panel_csv;
    if (opt.t0) cfg["panel"]["t0"] = *opt.t0;
    if (opt.m) cfg["panel"]["m"] = *opt.m;
  }
  cfg["out"] = opt.out_dir;
  if (!cfg.contains("seed")) cfg["seed"] = 1;
  if (!cfg.contains("threads")) cfg["threads"] = 0;
  return cfg;
}

struct PanelSource {
  PanelSeries panel;
  std::optional<dgp::DgpSpec> spec;              // set when simulated
  std::vector<double> true_tau;                  // simulated effect path
  std::vector<double> y_control;                 // simulated counterfactual
};

PanelSource resolve_panel(const Json& cfg) {
  bool has_csv = cfg.contains("panel") && cfg["panel"].contains("csv");
  bool has_dgp = cfg.contains("dgp");
  if (has_csv == has_dgp)
    throw std::runtime_error("config must provide exactly one panel source (panel.csv or dgp)");
  PanelSource src;
  if (has_csv) {
    const Json& p = cfg["panel"];
    if (!p.contains("t0")) throw std::runtime_error("panel.t0 is required for CSV panels");
    std::map<std::string, std::string> schema;
    if (p.contains("t_column")) schema["t"] = p["t_column"].get<std::string>();
    if (p.contains("y_column")) schema["y"] = p["y_column"].get<std::string>();
    src.panel = load_panel(p["csv"].get<std::string>(), schema, p["t0"].get<int>(),
                           p.value("m", 0));
  } else {
    dgp::DgpSpec spec = dgp_spec_from_json(cfg["dgp"]);
    dgp::SimulatedPanel sim = dgp::simulate(spec);
    src.panel = std::move(sim.panel);
    src.spec = spec;
    src.true_tau = std::move(sim.tau);
    src.y_control = std::move(sim.y_control);
  }
  return src;
}

std::vector<LearnerSpec> resolve_learners(const Json& cfg) {
  std::vector<LearnerSpec> specs;
  if (cfg.contains("learners")) {
    for (const auto& j : cfg["learners"]) specs.push_back(learner_spec_from_json(j));
  } else {
    specs.push_back({"sc-constrained", {}, std::nullopt});
    specs.push_back({"ridge", {{"lambda", 1e-3}}, std::nullopt});
    specs.push_back({"knn", {{"k", 5}}, std::nullopt});
    specs.push_back({"ar", {{"p", 3}}, std::nullopt});
  }
  if (specs.empty()) throw std::runtime_error("learner pool must not be empty");
  return specs;
}

WeightScheme resolve_scheme(const Json& cfg) {
  if (cfg.contains("scheme")) return scheme_from_json(cfg["scheme"]);
  return WeightScheme::exponential(0.0);  // eta 0 -> 1/T+ at use time
}

void ensure_out(const Json& cfg) { fs::create_directories(cfg["out"].get<std::string>()); }

std::string out_path(const Json& cfg, const std::string& name) {
  return (fs::path(cfg["out"].get<std::string>()) / name).string();
}

std::string format_series_csv(const PanelSeries& panel, const std::vector<int>& times,
                              const std::vector<double>& observed,
                              const std::vector<double>& counterfactual) {
  std::ostringstream out;
  out.precision(17);
  out << "t,observed,counterfactual\n";
  for (std::size_t i = 0; i < times.size(); ++i)
    out << times[i] << ',' << observed[i] << ',' << counterfactual[i] << '\n';
  (void)panel;
  return out.str();
}

int cmd_test(const Json& cfg) {
  PanelSource src = resolve_panel(cfg);
  auto specs = resolve_learners(cfg);
  WeightScheme scheme = resolve_scheme(cfg);
  const Json tj = cfg.value("test", Json::object());

  TestSpec spec;
  std::string stat = tj.value("statistic", "sharp");
  if (stat == "sharp")
    spec.statistic = StatKind::sharp;
  else if (stat == "average")
    spec.statistic = StatKind::average;
  else
    throw std::runtime_error("test.statistic must be sharp or average");
  NullConfig null_cfg = tj.contains("null") ? null_config_from_json(tj["null"]) : NullConfig{};
  spec.null = null_cfg.materialize(src.panel);
  spec.alpha = tj.value("alpha", 0.05);
  spec.replicates = tj.value("replicates", 200);
  spec.block = tj.value("block", 0);
  spec.scheme = scheme;
  spec.seed = cfg["seed"].get<std::uint64_t>();
  spec.threads = cfg["threads"].get<int>();
  spec.keep_replicates = tj.value("keep_replicates", false);

  auto pool = fit_pool(specs, src.panel, spec.seed);
  TestReport report = bootstrap_test(src.panel, pool, spec);

  // observed-vs-counterfactual series over the eval block
  SplitPlan splits = make_splits(src.panel);
  NulledSeries yo = apply_null(src.panel, spec.null);
  std::vector<int> wt, et;
  for (int t = splits.weight.lo; t <= splits.weight.hi; ++t) wt.push_back(t);
  for (int t = splits.eval.lo; t <= splits.eval.hi; ++t) et.push_back(t);
  Eigen::MatrixXd wp = prediction_matrix(pool, src.panel, wt);
  Eigen::VectorXd wy(static_cast<int>(wt.size()));
  for (int i = 0; i < wy.size(); ++i) wy[i] = yo.at(wt[static_cast<std::size_t>(i)]);
  WeightScheme resolved = scheme;
  if (resolved.kind == WeightScheme::Kind::exponential && resolved.eta == 0.0)
    resolved.eta = default_eta_testing(src.panel.t_max);
  Eigen::VectorXd w = final_weights(wy, wp, resolved);
  Eigen::MatrixXd ep = prediction_matrix(pool, src.panel, et);
  std::vector<double> obs, hat;
  for (std::size_t i = 0; i < et.size(); ++i) {
    obs.push_back(yo.at(et[i]));
    hat.push_back(w.dot(ep.row(static_cast<int>(i)).transpose()));
  }

  ensure_out(cfg);
  Json out = test_report_to_json(report, spec.keep_replicates);
  out["scheme"] = scheme_to_json(resolved);
  out["null"] = null_config_to_json(null_cfg);
  write_text_file(out_path(cfg, "report.json"), out.dump(2) + "\n");
  write_text_file(out_path(cfg, "series.csv"), format_series_csv(src.panel, et, obs, hat));
  std::cout << (report.reject ? "reject" : "accept") << " (statistic=" << report.statistic
            << ", quantile=" << report.quantile << ", p=" << report.p_value << ")\n";
  return 0;
}

int cmd_ate(const Json& cfg) {
  PanelSource src = resolve_panel(cfg);
  auto specs = resolve_learners(cfg);
  WeightScheme scheme = resolve_scheme(cfg);
  std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  auto pool = fit_pool(specs, src.panel, seed);
  AteReport report = estimate_ate(src.panel, pool, scheme);

  SplitPlan splits = make_splits(src.panel);
  std::vector<int> et;
  for (int t = splits.eval.lo; t <= splits.eval.hi; ++t) et.push_back(t);
  Eigen::MatrixXd ep = prediction_matrix(pool, src.panel, et);
  std::vector<double> obs, hat;
  for (std::size_t i = 0; i < et.size(); ++i) {
    obs.push_back(src.panel.y_at(et[i]));
    hat.push_back(report.weights.dot(ep.row(static_cast<int>(i)).transpose()));
  }

  ensure_out(cfg);
  write_text_file(out_path(cfg, "report.json"), ate_report_to_json(report).dump(2) + "\n");
  write_text_file(out_path(cfg, "series.csv"), format_series_csv(src.panel, et, obs, hat));
  std::cout << "ate=" << report.ate << " (gap=" << report.post_mean_gap
            << ", bias=" << report.pre_bias << ")\n";
  return 0;
}

int cmd_cate(const Json& cfg) {
  PanelSource src = resolve_panel(cfg);
  auto specs = resolve_learners(cfg);
  WeightScheme scheme = resolve_scheme(cfg);
  const Json cj = cfg.value("cate", Json::object());
  std::string mode = cj.value("mode", "T");
  std::uint64_t seed = cfg["seed"].get<std::uint64_t>();

  CateModel model;
  if (mode == "T") {
    model = fit_t_learner(src.panel, specs, scheme, seed);
  } else if (mode == "X") {
    CateOptions options;
    options.seed = seed;
    options.sign_fix = cj.value("x_learner_sign_fix", true);
    if (cj.contains("residual_learners"))
      for (const auto& j : cj["residual_learners"])
        options.residual_specs.push_back(learner_spec_from_json(j));
    else
      options.residual_specs.push_back({"ridge", {{"lambda", 0.0}}, std::nullopt});
    model = fit_x_learner(src.panel, specs, scheme, options);
  } else {
    throw std::runtime_error("cate.mode must be T or X");
  }

  std::string truth = cj.value("truth", "none");
  std::function<double(const Eigen::RowVectorXd&)> truth_fn;
  if (truth == "linear")
    truth_fn = [](const Eigen::RowVectorXd& r) { return r.sum(); };
  else if (truth == "quadratic")
    truth_fn = [](const Eigen::RowVectorXd& r) { return r.array().square().sum(); };
  else if (truth != "none")
    throw std::runtime_error("cate.truth must be none, linear or quadratic");

  std::ostringstream table;
  table.precision(17);
  table << (truth_fn ? "t,tau_hat,tau_true\n" : "t,tau_hat\n");
  for (int t = src.panel.t_min; t <= src.panel.t_max; ++t) {
    if (t > src.panel.t0 && t <= src.panel.t0 + src.panel.carryover) continue;
    Eigen::RowVectorXd row = src.panel.row_at(t);
    table << t << ',' << model.predict(row, t);
    if (truth_fn) table << ',' << truth_fn(row);
    table << '\n';
  }

  ensure_out(cfg);
  Json out;
  out["mode"] = mode;
  if (truth_fn) out["rmse"] = cate_mse(model, src.panel, truth_fn);
  write_text_file(out_path(cfg, "report.json"), out.dump(2) + "\n");
  write_text_file(out_path(cfg, "cate.csv"), table.str());
  if (truth_fn) std::cout << "rmse=" << out["rmse"].get<double>() << "\n";
  return 0;
}

int cmd_simulate(const Json& cfg) {
  if (!cfg.contains("dgp")) throw std::runtime_error("simulate requires a dgp spec");
  dgp::DgpSpec spec = dgp_spec_from_json(cfg["dgp"]);
  dgp::SimulatedPanel sim = dgp::simulate(spec);

  std::ostringstream panel_csv;
  panel_csv.precision(17);
  panel_csv << "t,y";
  for (int j = 0; j < sim.panel.cols(); ++j) panel_csv << ",x" << (j + 1);
  panel_csv << '\n';
  for (int t = sim.panel.t_min; t <= sim.panel.t_max; ++t) {
    panel_csv << t << ',' << sim.panel.y_at(t);
    for (int j = 0; j < sim.panel.cols(); ++j)
      panel_csv << ',' << sim.panel.X(sim.panel.index_of(t), j);
    panel_csv << '\n';
  }
  std::ostringstream truth_csv;
  truth_csv.precision(17);
  truth_csv << "t,y_control,tau\n";
  for (int t = sim.panel.t_min; t <= sim.panel.t_max; ++t) {
    int i = sim.panel.index_of(t);
    truth_csv << t << ',' << sim.y_control[static_cast<std::size_t>(i)] << ','
              << sim.tau[static_cast<std::size_t>(i)] << '\n';
  }

  ensure_out(cfg);
  Json meta;
  meta["dgp"] = dgp_spec_to_json(spec);
  meta["t_min"] = sim.panel.t_min;
  meta["t_max"] = sim.panel.t_max;
  meta["t0"] = sim.panel.t0;
  meta["m"] = sim.panel.carryover;
  write_text_file(out_path(cfg, "panel.csv"), panel_csv.str());
  write_text_file(out_path(cfg, "truth.csv"), truth_csv.str());
  write_text_file(out_path(cfg, "meta.json"), meta.dump(2) + "\n");
  std::cout << "wrote panel.csv, truth.csv, meta.json\n";
  return 0;
}

int cmd_power(const Json& cfg) {
  const Json pj = cfg.value("power", Json::object());
  if (!pj.contains("dgps")) throw std::runtime_error("power requires power.dgps");
  std::vector<dgp::DgpSpec> dgps;
  for (const auto& j : pj["dgps"]) dgps.push_back(dgp_spec_from_json(j));
  std::vector<std::string> methods =
      pj.value("methods", std::vector<std::string>{"synthetic-learner"});
  std::vector<double> effects = pj.value("effects", std::vector<double>{0.0});
  int reps = pj.value("reps", 100);

  dgp::PowerConfig config;
  config.learners = resolve_learners(cfg);
  config.scheme = resolve_scheme(cfg);
  config.replicates = pj.value("replicates", 200);
  config.level = pj.value("level", 0.05);
  config.block = pj.value("block", 0);
  config.oracle_sims = pj.value("oracle_sims", 2000);
  config.threads = cfg["threads"].get<int>();

  dgp::PowerCurve curve = dgp::power_study(dgps, methods, effects, reps,
                                           cfg["seed"].get<std::uint64_t>(), config);

  ensure_out(cfg);
  write_text_file(out_path(cfg, "power.csv"), power_curve_csv(curve));
  // gnu-style two-column plot data per (dgp, method) curve
  for (const auto& d : dgps)
    for (const auto& m : methods) {
      std::ostringstream dat;
      for (const auto& cell : curve.cells)
        if (cell.dgp == d.id && cell.method == m)
          dat << cell.effect << ' '
              << static_cast<double>(cell.rejections) / static_cast<double>(cell.reps) << '\n';
      write_text_file(out_path(cfg, "power_" + d.id + "_" + m + ".dat"), dat.str());
    }
  std::cout << "wrote power.csv and " << dgps.size() * methods.size() << " plot files\n";
  return 0;
}

int cmd_placebo(const Json& cfg) {
  // Each numeric non-time column becomes the treated unit in turn, with the
  // remaining columns as covariates.
  if (!(cfg.contains("panel") && cfg["panel"].contains("csv")))
    throw std::runtime_error("placebo requires panel.csv");
  const Json& p = cfg["panel"];
  if (!p.contains("t0")) throw std::runtime_error("panel.t0 is required");
  std::map<std::string, std::string> schema;
  if (p.contains("t_column")) schema["t"] = p["t_column"].get<std::string>();
  if (p.contains("y_column")) schema["y"] = p["y_column"].get<std::string>();
  PanelSeries base = load_panel(p["csv"].get<std::string>(), schema, p["t0"].get<int>(),
                                p.value("m", 0));

  std::map<std::string, PanelSeries> panels;
  std::string y_name = schema.count("y") ? schema["y"] : "y";
  {
    // the original outcome as a unit
    panels.emplace(y_name, base);
    // each covariate column as the outcome, remaining columns + y as covariates
    for (int j = 0; j < base.cols(); ++j) {
      PanelSeries swapped = base;
      std::vector<double> new_y(base.rows());
      for (int i = 0; i < base.rows(); ++i) new_y[static_cast<std::size_t>(i)] = base.X(i, j);
      Eigen::MatrixXd new_X(base.rows(), base.cols());
      std::vector<std::string> names;
      int col = 0;
      for (int k = 0; k < base.cols(); ++k) {
        if (k == j) continue;
        new_X.col(col) = base.X.col(k);
        names.push_back(base.columns[static_cast<std::size_t>(k)]);
        ++col;
      }
      for (int i = 0; i < base.rows(); ++i) new_X(i, col) = base.y[static_cast<std::size_t>(i)];
      names.push_back(y_name);
      swapped.y = std::move(new_y);
      swapped.X = std::move(new_X);
      swapped.columns = std::move(names);
      panels.emplace(base.columns[static_cast<std::size_t>(j)], std::move(swapped));
    }
  }

  auto specs = resolve_learners(cfg);
  const Json tj = cfg.value("test", Json::object());
  TestSpec spec;
  spec.statistic = tj.value("statistic", std::string("sharp")) == "average"
                       ? StatKind::average
                       : StatKind::sharp;
  NullConfig null_cfg = tj.contains("null") ? null_config_from_json(tj["null"]) : NullConfig{};
  spec.null = null_cfg.materialize(base);
  spec.alpha = tj.value("alpha", 0.05);
  spec.replicates = tj.value("replicates", 200);
  spec.block = tj.value("block", 0);
  spec.scheme = resolve_scheme(cfg);
  spec.seed = cfg["seed"].get<std::uint64_t>();
  spec.threads = cfg["threads"].get<int>();
  spec.keep_replicates = false;

  auto reports = placebo_suite(panels, specs, spec);
  ensure_out(cfg);
  Json summary = Json::object();
  for (const auto& [unit, report] : reports) {
    Json rj = test_report_to_json(report, false);
    write_text_file(out_path(cfg, "placebo_" + unit + ".json"), rj.dump(2) + "\n");
    summary[unit] = rj;
  }
  write_text_file(out_path(cfg, "placebo_summary.json"), summary.dump(2) + "\n");
  std::cout << "wrote " << reports.size() << " placebo reports\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble counterfactual prediction, treatment-effect tests and simulations"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "JSON config file (flags override fields)");
  app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--threads", opt.threads, "worker threads (0 = machine parallelism)");
  app.add_option("--panel", opt.panel_csv, "panel CSV path (overrides config)");
  app.add_option("--t0", opt.t0, "last pre-treatment time for --panel");
  app.add_option("--m", opt.m, "carryover length for --panel");

  auto* c_test = app.add_subcommand("test", "sharp/average null test via circular block bootstrap");
  auto* c_ate = app.add_subcommand("ate", "average treatment effect with bias correction");
  auto* c_cate = app.add_subcommand("cate", "heterogeneous effects via T- or X-learning");
  auto* c_sim = app.add_subcommand("simulate", "write one simulated panel (panel.csv, truth.csv, meta.json)");
  auto* c_power = app.add_subcommand("power", "size/power study over DGPs and methods (power.csv + .dat curves)");
  auto* c_placebo = app.add_subcommand("placebo", "bootstrap test with each unit cast as treated");

  CLI11_PARSE(app, argc, argv);

  try {
    Json cfg = load_config(opt);
    if (c_test->parsed()) return cmd_test(cfg);
    if (c_ate->parsed()) return cmd_ate(cfg);
    if (c_cate->parsed()) return cmd_cate(cfg);
    if (c_sim->parsed()) return cmd_simulate(cfg);
    if (c_power->parsed()) return cmd_power(cfg);
    if (c_placebo->parsed()) return cmd_placebo(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
