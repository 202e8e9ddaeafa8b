#include "epivar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "epivar/error.hpp"

namespace epivar {

std::vector<double> boundary_points(const std::vector<Interval>& intervals) {
  std::vector<double> out;
  out.reserve(intervals.size() * 2);
  for (const auto& j : intervals) {
    out.push_back(j.start);
    out.push_back(j.end);
  }
  return out;
}

namespace {

double directed(const std::vector<double>& from, const std::vector<double>& to) {
  double worst = 0.0;
  for (double a : from) {
    double nearest = std::numeric_limits<double>::infinity();
    for (double b : to) nearest = std::min(nearest, std::abs(a - b));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace

double hausdorff_distance(const std::vector<double>& truth, const std::vector<double>& estimate,
                          double empty_convention) {
  if (truth.empty()) {
    throw Error(ErrorKind::contract, "Hausdorff distance needs a nonempty truth set");
  }
  if (estimate.empty()) return empty_convention;
  return std::max(directed(truth, estimate), directed(estimate, truth));
}

double hausdorff_distance(const ScenarioOutcome& outcome, double empty_convention) {
  return hausdorff_distance(boundary_points(outcome.truth), boundary_points(outcome.estimate),
                            empty_convention);
}

double empirical_power(const std::vector<ScenarioOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorKind::contract, "empirical power needs at least one run");
  }
  const auto hits = std::count_if(outcomes.begin(), outcomes.end(),
                                  [](const auto& o) { return !o.estimate.empty(); });
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

std::map<int, int> count_distribution(const std::vector<ScenarioOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw Error(ErrorKind::contract, "count distribution needs at least one run");
  }
  std::map<int, int> counts;
  for (const auto& o : outcomes) ++counts[static_cast<int>(o.estimate.size())];
  return counts;
}

OutcomeSummary summarize(const std::vector<ScenarioOutcome>& outcomes, double empty_convention) {
  OutcomeSummary s;
  s.runs = static_cast<int>(outcomes.size());
  s.power = empirical_power(outcomes);
  s.counts = count_distribution(outcomes);
  double sum = 0.0, sum_sq = 0.0, sum_all = 0.0;
  int n = 0;
  for (const auto& o : outcomes) {
    const double h = hausdorff_distance(o, empty_convention);
    sum_all += h;
    if (o.estimate.empty()) {
      ++s.empty_runs;
      continue;
    }
    sum += h;
    sum_sq += h * h;
    ++n;
  }
  s.hausdorff_mean_all = sum_all / s.runs;
  if (n > 0) {
    s.hausdorff_mean = sum / n;
    s.hausdorff_sd = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1))) : 0.0;
  }
  return s;
}

namespace {

void quoted(std::ostream& os, const std::string& s) { os << '"' << s << '"'; }

}  // namespace

void write_power_table(std::ostream& os, const std::vector<TableRow>& rows) {
  os << "scheme,method,known,estimated\n";
  os << std::fixed << std::setprecision(0);
  for (const auto& r : rows) {
    quoted(os, r.scheme);
    os << ',' << r.method << ',';
    if (r.known) os << 100.0 * r.known->power;
    os << ',';
    if (r.estimated) os << 100.0 * r.estimated->power;
    os << '\n';
  }
  os.unsetf(std::ios_base::floatfield);
}

void write_hausdorff_table(std::ostream& os, const std::vector<TableRow>& rows, int horizon) {
  os << "scheme,method,known,known_pct_T,known_empty,estimated,estimated_pct_T,"
        "estimated_empty\n";
  auto cell = [&](const std::optional<OutcomeSummary>& s) {
    if (!s) {
      os << ",,";
      return;
    }
    os << std::fixed << std::setprecision(2) << '"' << s->hausdorff_mean << " ("
       << s->hausdorff_sd << ")\"," << 100.0 * s->hausdorff_mean / horizon << ','
       << s->empty_runs;
    os.unsetf(std::ios_base::floatfield);
  };
  for (const auto& r : rows) {
    quoted(os, r.scheme);
    os << ',' << r.method << ',';
    cell(r.known);
    os << ',';
    cell(r.estimated);
    os << '\n';
  }
}

void write_count_table(std::ostream& os, const std::vector<TableRow>& rows, int max_count) {
  os << "scheme,method";
  for (const char* mode : {"known", "estimated"}) {
    for (int c = 0; c <= max_count; ++c) os << ',' << mode << '_' << c;
  }
  os << '\n';
  auto cells = [&](const std::optional<OutcomeSummary>& s) {
    for (int c = 0; c <= max_count; ++c) {
      os << ',';
      if (!s) continue;
      int n = 0;
      for (const auto& [count, runs] : s->counts) {
        if (count == c || (c == max_count && count > max_count)) n += runs;
      }
      os << n;
    }
  };
  for (const auto& r : rows) {
    quoted(os, r.scheme);
    os << ',' << r.method;
    cells(r.known);
    cells(r.estimated);
    os << '\n';
  }
}

}  // namespace epivar
