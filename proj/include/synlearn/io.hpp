#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "synlearn/aggregation.hpp"
#include "synlearn/dgp.hpp"
#include "synlearn/effects.hpp"
#include "synlearn/inference.hpp"
#include "synlearn/learners.hpp"

// JSON round-trips for specs and reports. Field order is fixed (ordered_json)
// so serialized reports are byte-stable.

namespace synlearn {

using Json = nlohmann::ordered_json;

Json learner_spec_to_json(const LearnerSpec& spec);
LearnerSpec learner_spec_from_json(const Json& j);

Json scheme_to_json(const WeightScheme& scheme);
WeightScheme scheme_from_json(const Json& j);

// Null hypothesis as configured (materialized against a panel later):
// {"kind": "additive"|"multiplicative"|"linear-trend", "value": a, "delta": d}
struct NullConfig {
  std::string kind = "additive";
  double value = 0.0;
  double delta = 0.0;

  NullSpec materialize(const PanelSeries& panel) const;
};

Json null_config_to_json(const NullConfig& cfg);
NullConfig null_config_from_json(const Json& j);

Json test_report_to_json(const TestReport& report, bool keep_replicates);
Json ate_report_to_json(const AteReport& report);

Json dgp_spec_to_json(const dgp::DgpSpec& spec);
dgp::DgpSpec dgp_spec_from_json(const Json& j);

std::string power_curve_csv(const dgp::PowerCurve& curve);

// regret report CSV: time, ensemble loss, best-expert loss, regret
std::string regret_path_csv(const Eigen::VectorXd& y, const Eigen::MatrixXd& preds,
                            const WeightScheme& scheme);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace synlearn
