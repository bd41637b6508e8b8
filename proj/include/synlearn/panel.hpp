#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

// Panel data model for a single treated unit observed over an integer
// timeline [t_min, t_max]. Convention: the learner-training block ends at
// time 1, the treatment starts after t0, and the m periods following t0 are
// contaminated by carryover and excluded from inference.

namespace synlearn {

struct PanelSeries {
  int t_min = 0;               // first time (must be < 1)
  int t_max = 0;               // last time
  int t0 = 0;                  // last pre-treatment time
  int carryover = 0;           // m >= 0
  std::vector<double> y;       // outcome of the treated unit, one per time
  Eigen::MatrixXd X;           // rows = times, cols = control units / covariates
  std::vector<std::string> columns;  // covariate names (may be empty)

  int rows() const { return t_max - t_min + 1; }
  int cols() const { return static_cast<int>(X.cols()); }
  int index_of(int t) const { return t - t_min; }
  double y_at(int t) const { return y[static_cast<std::size_t>(index_of(t))]; }
  Eigen::RowVectorXd row_at(int t) const { return X.row(index_of(t)); }

  // number of usable post-treatment periods, T_m = t_max - t0 - m
  int eval_len() const { return t_max - t0 - carryover; }

  // Throws std::invalid_argument when the timeline or shapes are malformed.
  void validate() const;
};

// Inclusive integer interval; empty when hi < lo.
struct TimeRange {
  int lo = 0;
  int hi = -1;
  int size() const { return hi < lo ? 0 : hi - lo + 1; }
  bool contains(int t) const { return t >= lo && t <= hi; }
};

// Sample-split plan. train and weight partition the pre-treatment period;
// correct (the ATE bias-correction block) is the trailing half of weight.
struct SplitPlan {
  TimeRange train;    // [t_min, 1]
  TimeRange weight;   // [2, t0]
  TimeRange correct;  // [floor(t0/2)+1, t0]
  TimeRange eval;     // [t0+m+1, t_max]
};

SplitPlan make_splits(const PanelSeries& panel);

enum class NullKind { additive, multiplicative, linear_trend };

// Null hypothesis on the post-treatment effect trajectory a_t for
// t in (t0+m, t_max]. linear_trend generates a_t = delta * (t - t0).
struct NullSpec {
  NullKind kind = NullKind::additive;
  std::vector<double> trajectory;  // length t_max - t0 - m

  static NullSpec constant(NullKind kind, double value, const PanelSeries& panel);
  static NullSpec linear(double delta, const PanelSeries& panel);

  void validate(const PanelSeries& panel) const;
};

// Outcome series after imposing the null: values[t - t_min] = Y_t^o.
// Entries inside the carryover window (t0, t0+m] are poisoned with NaN so
// that any accidental use surfaces immediately.
struct NulledSeries {
  int t_min = 0;
  int t0 = 0;
  int carryover = 0;
  std::vector<double> values;

  double at(int t) const { return values[static_cast<std::size_t>(t - t_min)]; }
  bool excluded(int t) const { return t > t0 && t <= t0 + carryover; }
};

NulledSeries apply_null(const PanelSeries& panel, const NullSpec& null);

// Inverts apply_null on a nulled series (identity before t0, excluded window
// untouched). Used by round-trip property tests.
std::vector<double> invert_null(const NulledSeries& series, const NullSpec& null,
                                const PanelSeries& panel);

// CSV ingestion. The file must have a header row; `schema` can rename the
// required columns (keys "t" and "y"); every other numeric column becomes a
// covariate in header order. Missing integer times between min and max are
// inserted and all gaps (inserted rows or empty cells) are filled by linear
// interpolation in time. Leading/trailing gaps are an error.
PanelSeries load_panel(const std::string& path,
                       const std::map<std::string, std::string>& schema, int t0, int m);

}  // namespace synlearn
