#include "synlearn/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace synlearn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string low;
  for (char c : cell)
    if (c != ' ' && c != '\r') low.push_back(static_cast<char>(std::tolower(c)));
  return low.empty() || low == "na" || low == "nan" || low == "null";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

// Linear interpolation of NaN runs over the integer time grid.
void interpolate_column(std::vector<double>& v, const std::string& name) {
  const int n = static_cast<int>(v.size());
  int first = -1, last = -1;
  for (int i = 0; i < n; ++i)
    if (std::isfinite(v[static_cast<std::size_t>(i)])) {
      if (first < 0) first = i;
      last = i;
    }
  if (first < 0) fail("column '" + name + "' has no numeric values");
  if (first != 0 || last != n - 1)
    fail("column '" + name + "' has a leading or trailing gap; no extrapolation");
  int i = first;
  while (i <= last) {
    if (std::isfinite(v[static_cast<std::size_t>(i)])) {
      ++i;
      continue;
    }
    int lo = i - 1;
    int hi = i;
    while (!std::isfinite(v[static_cast<std::size_t>(hi)])) ++hi;
    for (int k = i; k < hi; ++k) {
      double w = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
      v[static_cast<std::size_t>(k)] =
          (1.0 - w) * v[static_cast<std::size_t>(lo)] + w * v[static_cast<std::size_t>(hi)];
    }
    i = hi;
  }
}

}  // namespace

void PanelSeries::validate() const {
  if (!(t_min <= 1)) fail("panel timeline must reach time 1 (train block [t_min,1])");
  if (!(1 <= t0)) fail("t0 must be >= 1");
  if (!(t0 < t_max)) fail("t0 must precede t_max (no post-treatment period otherwise)");
  if (carryover < 0) fail("carryover m must be nonnegative");
  if (!(t0 + carryover < t_max)) fail("carryover window (t0, t0+m] swallows the post period");
  const int n = rows();
  if (static_cast<int>(y.size()) != n) fail("y length must equal the number of times");
  if (X.rows() != n) fail("X row count must equal the number of times");
  if (X.cols() < 1) fail("panel needs at least one covariate column");
  for (double v : y)
    if (!std::isfinite(v)) fail("non-finite outcome value after ingestion");
  if (!X.allFinite()) fail("non-finite covariate value after ingestion");
}

SplitPlan make_splits(const PanelSeries& panel) {
  panel.validate();
  if (panel.t0 - 1 < 4) fail("pre-treatment period too short (need t0 - 1 >= 4)");
  SplitPlan plan;
  plan.train = {panel.t_min, 1};
  plan.weight = {2, panel.t0};
  plan.correct = {panel.t0 / 2 + 1, panel.t0};
  plan.eval = {panel.t0 + panel.carryover + 1, panel.t_max};
  return plan;
}

NullSpec NullSpec::constant(NullKind kind, double value, const PanelSeries& panel) {
  NullSpec spec;
  spec.kind = kind;
  spec.trajectory.assign(static_cast<std::size_t>(panel.eval_len()), value);
  return spec;
}

NullSpec NullSpec::linear(double delta, const PanelSeries& panel) {
  NullSpec spec;
  spec.kind = NullKind::linear_trend;
  spec.trajectory.resize(static_cast<std::size_t>(panel.eval_len()));
  for (int i = 0; i < panel.eval_len(); ++i) {
    int t = panel.t0 + panel.carryover + 1 + i;
    spec.trajectory[static_cast<std::size_t>(i)] = delta * static_cast<double>(t - panel.t0);
  }
  return spec;
}

void NullSpec::validate(const PanelSeries& panel) const {
  if (static_cast<int>(trajectory.size()) != panel.eval_len())
    fail("null trajectory length must equal t_max - t0 - m");
  if (kind == NullKind::multiplicative)
    for (double a : trajectory)
      if (a == 0.0) fail("multiplicative null requires a_t != 0");
  for (double a : trajectory)
    if (!std::isfinite(a)) fail("null trajectory must be finite");
}

NulledSeries apply_null(const PanelSeries& panel, const NullSpec& null) {
  panel.validate();
  null.validate(panel);
  NulledSeries out;
  out.t_min = panel.t_min;
  out.t0 = panel.t0;
  out.carryover = panel.carryover;
  out.values = panel.y;
  for (int t = panel.t0 + 1; t <= panel.t0 + panel.carryover; ++t)
    out.values[static_cast<std::size_t>(panel.index_of(t))] = kNaN;
  for (int i = 0; i < panel.eval_len(); ++i) {
    int t = panel.t0 + panel.carryover + 1 + i;
    double a = null.trajectory[static_cast<std::size_t>(i)];
    double& v = out.values[static_cast<std::size_t>(panel.index_of(t))];
    switch (null.kind) {
      case NullKind::additive:
      case NullKind::linear_trend:
        v -= a;
        break;
      case NullKind::multiplicative:
        v /= a;
        break;
    }
  }
  return out;
}

std::vector<double> invert_null(const NulledSeries& series, const NullSpec& null,
                                const PanelSeries& panel) {
  std::vector<double> out = series.values;
  for (int i = 0; i < panel.eval_len(); ++i) {
    int t = panel.t0 + panel.carryover + 1 + i;
    double a = null.trajectory[static_cast<std::size_t>(i)];
    double& v = out[static_cast<std::size_t>(panel.index_of(t))];
    switch (null.kind) {
      case NullKind::additive:
      case NullKind::linear_trend:
        v += a;
        break;
      case NullKind::multiplicative:
        v *= a;
        break;
    }
  }
  return out;
}

PanelSeries load_panel(const std::string& path,
                       const std::map<std::string, std::string>& schema, int t0, int m) {
  std::ifstream in(path);
  if (!in) fail("cannot open panel file: " + path);

  std::string t_col = "t";
  std::string y_col = "y";
  if (auto it = schema.find("t"); it != schema.end()) t_col = it->second;
  if (auto it = schema.find("y"); it != schema.end()) y_col = it->second;

  std::string line;
  if (!std::getline(in, line)) fail("empty panel file: " + path);
  std::vector<std::string> header = split_csv_line(line);
  int t_idx = -1, y_idx = -1;
  std::vector<int> cov_idx;
  std::vector<std::string> cov_names;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[static_cast<std::size_t>(i)] == t_col)
      t_idx = i;
    else if (header[static_cast<std::size_t>(i)] == y_col)
      y_idx = i;
    else {
      cov_idx.push_back(i);
      cov_names.push_back(header[static_cast<std::size_t>(i)]);
    }
  }
  if (t_idx < 0) fail("missing time column '" + t_col + "' in " + path);
  if (y_idx < 0) fail("missing outcome column '" + y_col + "' in " + path);
  if (cov_idx.empty()) fail("panel needs at least one covariate column");

  // time -> (y, covariates); cells may be NaN before interpolation
  std::map<int, std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != static_cast<int>(header.size()))
      fail("row " + std::to_string(line_no) + " has wrong field count");
    double tv = 0.0;
    if (!parse_double(cells[static_cast<std::size_t>(t_idx)], tv) ||
        tv != std::floor(tv))
      fail("row " + std::to_string(line_no) + ": time must be an integer");
    int t = static_cast<int>(tv);
    if (rows.count(t)) fail("duplicate time " + std::to_string(t));
    std::vector<double> vals(1 + cov_idx.size(), kNaN);
    auto read_cell = [&](int col, double& out) {
      const std::string& cell = cells[static_cast<std::size_t>(col)];
      if (is_missing(cell)) {
        out = kNaN;
        return;
      }
      if (!parse_double(cell, out))
        fail("row " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    };
    read_cell(y_idx, vals[0]);
    for (std::size_t j = 0; j < cov_idx.size(); ++j) read_cell(cov_idx[j], vals[j + 1]);
    rows.emplace(t, std::move(vals));
  }
  if (rows.size() < 2) fail("panel needs at least two rows");

  const int t_min = rows.begin()->first;
  const int t_max = rows.rbegin()->first;
  const int n = t_max - t_min + 1;
  const int ncov = static_cast<int>(cov_idx.size());

  std::vector<std::vector<double>> cols(static_cast<std::size_t>(1 + ncov),
                                        std::vector<double>(static_cast<std::size_t>(n), kNaN));
  for (const auto& [t, vals] : rows)
    for (int j = 0; j <= ncov; ++j)
      cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(t - t_min)] =
          vals[static_cast<std::size_t>(j)];

  interpolate_column(cols[0], y_col);
  for (int j = 0; j < ncov; ++j)
    interpolate_column(cols[static_cast<std::size_t>(j + 1)], cov_names[static_cast<std::size_t>(j)]);

  PanelSeries panel;
  panel.t_min = t_min;
  panel.t_max = t_max;
  panel.t0 = t0;
  panel.carryover = m;
  panel.y = cols[0];
  panel.X.resize(n, ncov);
  for (int j = 0; j < ncov; ++j)
    for (int i = 0; i < n; ++i)
      panel.X(i, j) = cols[static_cast<std::size_t>(j + 1)][static_cast<std::size_t>(i)];
  panel.columns = cov_names;
  if (t0 < t_min || t0 > t_max) fail("t0 outside the panel time range");
  panel.validate();
  return panel;
}

}  // namespace synlearn
