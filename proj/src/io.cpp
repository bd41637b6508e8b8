#include "synlearn/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace synlearn {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

Json learner_spec_to_json(const LearnerSpec& spec) {
  Json j;
  j["kind"] = spec.kind;
  j["params"] = Json::object();
  for (const auto& [k, v] : spec.params) j["params"][k] = v;
  if (spec.clip) j["clip"] = *spec.clip;
  return j;
}

LearnerSpec learner_spec_from_json(const Json& j) {
  LearnerSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (j.contains("params"))
    for (const auto& [k, v] : j.at("params").items()) spec.params[k] = v.get<double>();
  if (j.contains("clip")) spec.clip = j.at("clip").get<double>();
  return spec;
}

Json scheme_to_json(const WeightScheme& scheme) {
  Json j;
  switch (scheme.kind) {
    case WeightScheme::Kind::exponential: j["kind"] = "exponential"; break;
    case WeightScheme::Kind::polynomial: j["kind"] = "polynomial"; break;
    case WeightScheme::Kind::follow_leader: j["kind"] = "follow-leader"; break;
    case WeightScheme::Kind::least_squares: j["kind"] = "least-squares"; break;
  }
  j["eta"] = scheme.eta;
  j["q"] = scheme.q;
  j["loss"] = scheme.loss == LossKind::quadratic ? "quadratic" : "absolute";
  return j;
}

WeightScheme scheme_from_json(const Json& j) {
  WeightScheme scheme;
  std::string kind = j.value("kind", "exponential");
  if (kind == "exponential")
    scheme.kind = WeightScheme::Kind::exponential;
  else if (kind == "polynomial")
    scheme.kind = WeightScheme::Kind::polynomial;
  else if (kind == "follow-leader")
    scheme.kind = WeightScheme::Kind::follow_leader;
  else if (kind == "least-squares")
    scheme.kind = WeightScheme::Kind::least_squares;
  else
    fail("unknown weight scheme kind: " + kind);
  scheme.eta = j.value("eta", 0.0);
  scheme.q = j.value("q", 2.0);
  std::string loss = j.value("loss", "quadratic");
  if (loss == "quadratic")
    scheme.loss = LossKind::quadratic;
  else if (loss == "absolute")
    scheme.loss = LossKind::absolute;
  else
    fail("unknown loss kind: " + loss);
  scheme.validate();
  return scheme;
}

NullSpec NullConfig::materialize(const PanelSeries& panel) const {
  if (kind == "additive") return NullSpec::constant(NullKind::additive, value, panel);
  if (kind == "multiplicative")
    return NullSpec::constant(NullKind::multiplicative, value, panel);
  if (kind == "linear-trend") return NullSpec::linear(delta, panel);
  fail("unknown null kind: " + kind);
}

Json null_config_to_json(const NullConfig& cfg) {
  Json j;
  j["kind"] = cfg.kind;
  j["value"] = cfg.value;
  j["delta"] = cfg.delta;
  return j;
}

NullConfig null_config_from_json(const Json& j) {
  NullConfig cfg;
  cfg.kind = j.value("kind", "additive");
  cfg.value = j.value("value", 0.0);
  cfg.delta = j.value("delta", 0.0);
  return cfg;
}

Json test_report_to_json(const TestReport& report, bool keep_replicates) {
  Json j;
  j["statistic"] = report.statistic;
  j["quantile"] = report.quantile;
  j["p_value"] = report.p_value;
  j["reject"] = report.reject;
  j["alpha"] = report.alpha;
  j["replicates"] = report.replicates;
  j["block"] = report.block;
  if (keep_replicates) j["replicate_stats"] = report.replicate_stats;
  return j;
}

Json ate_report_to_json(const AteReport& report) {
  Json j;
  j["ate"] = report.ate;
  j["post_mean_gap"] = report.post_mean_gap;
  j["pre_bias"] = report.pre_bias;
  j["eval_lo"] = report.eval_lo;
  j["eval_hi"] = report.eval_hi;
  std::vector<double> w(report.weights.data(), report.weights.data() + report.weights.size());
  j["weights"] = w;
  return j;
}

Json dgp_spec_to_json(const dgp::DgpSpec& spec) {
  Json j;
  j["id"] = spec.id;
  j["covariates"] = spec.covariates;
  j["effect"] = spec.effect;
  j["effect_kind"] = spec.effect_kind;
  j["total"] = spec.total;
  j["treat_time"] = spec.treat_time;
  j["train_len"] = spec.train_len;
  j["carryover"] = spec.carryover;
  j["degenerate"] = spec.degenerate;
  j["noise_scale"] = spec.noise_scale;
  j["seed"] = spec.seed;
  return j;
}

dgp::DgpSpec dgp_spec_from_json(const Json& j) {
  dgp::DgpSpec spec;
  spec.id = j.value("id", "dgp1");
  spec.covariates = j.value("covariates", 50);
  spec.effect = j.value("effect", 0.0);
  spec.effect_kind = j.value("effect_kind", "constant");
  spec.total = j.value("total", 300);
  spec.treat_time = j.value("treat_time", 250);
  spec.train_len = j.value("train_len", 125);
  spec.carryover = j.value("carryover", 0);
  spec.degenerate = j.value("degenerate", false);
  spec.noise_scale = j.value("noise_scale", 1.0);
  spec.seed = j.value("seed", std::uint64_t{1});
  spec.validate();
  return spec;
}

std::string power_curve_csv(const dgp::PowerCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "dgp,method,effect,rejections,reps,level\n";
  for (const auto& cell : curve.cells)
    out << cell.dgp << ',' << cell.method << ',' << cell.effect << ',' << cell.rejections
        << ',' << cell.reps << ',' << cell.level << '\n';
  return out.str();
}

std::string regret_path_csv(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                            const WeightScheme& scheme) {
  const int T = static_cast<int>(preds.rows());
  const int p = static_cast<int>(preds.cols());
  Eigen::MatrixXd losses(T, p);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < p; ++j) losses(t, j) = loss_value(scheme.loss, y[t], preds(t, j));
  auto path = online_weight_path(losses, scheme);
  std::ostringstream out;
  out.precision(17);
  out << "time,ensemble_loss,best_expert_loss,regret\n";
  double ens_cum = 0.0;
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(p);
  for (int t = 0; t < T; ++t) {
    double yhat = path[static_cast<std::size_t>(t)].dot(preds.row(t).transpose());
    ens_cum += loss_value(scheme.loss, y[t], yhat);
    cum += losses.row(t).transpose();
    double denom = static_cast<double>(t + 1);
    double best = cum.minCoeff() / denom;
    out << (t + 1) << ',' << ens_cum / denom << ',' << best << ',' << ens_cum / denom - best
        << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write file: " + path);
  out << content;
  if (!out.good()) fail("failed writing file: " + path);
}

}  // namespace synlearn
