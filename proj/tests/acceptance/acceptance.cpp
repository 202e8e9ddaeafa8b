// Acceptance suite. Each criterion prints one line
//   CRITERION n: PASS|FAIL <details>
// and the process exits 1 when the criterion fails.
//
//   acceptance --criterion N     run one criterion (1..8)
//   acceptance                   run all of them
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "CLI11.hpp"
#include "epivar/detection.hpp"
#include "epivar/estimation.hpp"
#include "epivar/evaluation.hpp"
#include "epivar/harness.hpp"
#include "epivar/parallel.hpp"
#include "epivar/test_stats.hpp"
#include "oracles.hpp"

using namespace epivar;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream details;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      details << " [failed: " << what << "]";
    }
  }
};

double minutes_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
}

double order_statistic(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(k, 1) - 1];
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

RegressionView random_view(std::mt19937_64& rng, int p, int q, int len) {
  RegressionView v;
  v.interval = {q + 1, q + len};
  v.response = oracle::random_matrix(rng, len, p);
  v.predictors = oracle::random_matrix(rng, len, p * q);
  return v;
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1] + 1e-12 * std::max(1.0, std::abs(trace[k - 1]))) return false;
  }
  return true;
}

// 1. Null law of the OLS statistic on one fixed interval.
Verdict criterion_1() {
  Verdict v;
  const auto start = Clock::now();
  const VarParams base = generate_dense_stationary(3, 11);
  const int reps = 2000;
  std::vector<double> values(reps);
  parallel_for(reps, [&](int r) {
    const TimeSeriesPanel panel = simulate(base, 201, 200, derive_seed(1, static_cast<std::uint64_t>(r)));
    values[static_cast<std::size_t>(r)] =
        ols_statistic(build_regression_view(panel, base.stacked(), Interval{2, 201}, 1)).value;
  });
  const boost::math::chi_squared chi(9.0);
  const double mean = mean_of(values);
  const double q95 = order_statistic(values, 0.95), q99 = order_statistic(values, 0.99);
  const double r95 = boost::math::quantile(chi, 0.95), r99 = boost::math::quantile(chi, 0.99);
  const double minutes = minutes_since(start);
  v.details << "mean " << mean << " (ref 9), q95 " << q95 << " (ref " << r95 << "), q99 " << q99
            << " (ref " << r99 << "), " << minutes << " min";
  v.require(std::abs(mean - 9.0) <= 0.05 * 9.0, "mean within 5%");
  v.require(std::abs(q95 - r95) <= 0.07 * r95, "q95 within 7%");
  v.require(std::abs(q99 - r99) <= 0.07 * r99, "q99 within 7%");
  v.require(minutes < 2.0, "runtime < 2 min");
  return v;
}

// 2. Fraction of null runs with any nonzero lasso statistic.
Verdict criterion_2() {
  Verdict v;
  const int T = 500, L = 11, runs = 200;
  const VarParams base = named_scenario("dense-single-1").base();
  const int p = base.dim();
  const IntervalSet set = seeded_intervals(T, L, 1 / 1.1, 1);
  const double scale = std::sqrt(L * (2.0 * std::log(p) + std::log(T)));
  std::vector<double> max15(runs), max30(runs), needed(runs);
  parallel_for(runs, [&](int r) {
    const TimeSeriesPanel panel = simulate(base, T, 200, derive_seed(2, static_cast<std::uint64_t>(r)));
    const auto i = static_cast<std::size_t>(r);
    for (const double c : {0.15, 0.3}) {
      StatConfig cfg;
      cfg.constant = c;
      double best = 0.0;
      for (const auto& s : scan_intervals(panel, base.stacked(), 1, set, cfg)) {
        best = std::max(best, s.value);
      }
      (c == 0.15 ? max15 : max30)[i] = best;
    }
    // Smallest C that zeroes every statistic: lambda must reach 2 ||X'Y||_inf.
    const IntervalScanner scanner(panel, base.stacked(), 1);
    double bound = 0.0;
    for (const auto& j : set.intervals) {
      bound = std::max(bound, 2.0 * scanner.moments(j).cross.cwiseAbs().maxCoeff());
    }
    needed[i] = bound / scale;
  });
  const auto frac = [&](const std::vector<double>& m) {
    return static_cast<double>(std::count_if(m.begin(), m.end(), [](double x) { return x > 0.0; })) /
           runs;
  };
  const double f15 = frac(max15), f30 = frac(max30);
  v.details << "s=" << set.size() << ", runs with max > 0: C=0.15 " << 100 * f15 << "%, C=0.3 "
            << 100 * f30 << "%; C needed for 90% / 98% clean runs: "
            << order_statistic(needed, 0.90) << " / " << order_statistic(needed, 0.98);
  v.require(f15 < 0.10, "C=0.15 fraction < 10%");
  v.require(f30 < 0.02, "C=0.3 fraction < 2%");
  return v;
}

struct SingleSchemes {
  SchemeSpec random;
  SchemeSpec seeded;
};

SingleSchemes single_schemes(int T, int L, int count) {
  const double decay = seeded_decay_for_count(T, L, count);
  IntervalSet seeded = seeded_intervals(T, L, decay, 1);
  std::ostringstream label;
  label << "seeded(s=" << seeded.size() << ")";
  return {{"random(s=" + std::to_string(count) + ")", random_intervals(T, L, count, 2024, 1)},
          {label.str(), std::move(seeded)}};
}

// 3. Power on the single dense anomaly.
Verdict criterion_3() {
  Verdict v;
  const auto start = Clock::now();
  ExperimentSpec spec{named_scenario("dense-single-1"), {}};
  const SingleSchemes schemes = single_schemes(500, 11, 1029);
  spec.schemes = {schemes.random, schemes.seeded};
  spec.runs = 100;
  spec.calibration_runs = 100;
  const ExperimentResult r = run_experiment(spec);

  // Reference powers in percent: {known, estimated} per scheme and method.
  const std::map<std::pair<std::string, StatMethod>, std::pair<double, double>> ref{
      {{schemes.random.label, StatMethod::ols}, {100, 82}},
      {{schemes.random.label, StatMethod::lasso}, {100, 94}},
      {{schemes.seeded.label, StatMethod::ols}, {100, 85}},
      {{schemes.seeded.label, StatMethod::lasso}, {100, 95}}};
  const auto power = [&](const std::string& scheme, StatMethod m, BaselineSource b) {
    return 100.0 * empirical_power(r.outcomes.at({scheme, m, b}));
  };
  for (const auto& scheme : {schemes.random.label, schemes.seeded.label}) {
    v.details << scheme << ":";
    for (const StatMethod m : {StatMethod::ols, StatMethod::lasso}) {
      const double known = power(scheme, m, BaselineSource::known);
      const double est = power(scheme, m, BaselineSource::estimated);
      const auto& [rk, re] = ref.at({scheme, m});
      v.details << " " << to_string(m) << " known " << known << " est " << est << ";";
      v.require(known >= 95.0, scheme + " " + to_string(m) + " known power >= 95");
      v.require(std::abs(known - rk) <= 12.0, scheme + " " + to_string(m) + " known within 12");
      v.require(std::abs(est - re) <= 12.0, scheme + " " + to_string(m) + " estimated within 12");
    }
    const double gap = power(scheme, StatMethod::lasso, BaselineSource::estimated) -
                       power(scheme, StatMethod::ols, BaselineSource::estimated);
    v.require(gap >= 5.0, scheme + " estimated lasso - ols >= 5");
    v.details << " ";
  }
  const double minutes = minutes_since(start);
  v.details << minutes << " min";
  v.require(minutes < 30.0, "runtime < 30 min");
  return v;
}

// 4. Hausdorff ordering over independent seed batches.
Verdict criterion_4() {
  Verdict v;
  const int batches = 5;
  const SingleSchemes schemes = single_schemes(500, 11, 1029);
  int ordered = 0;
  for (int b = 0; b < batches; ++b) {
    ExperimentSpec spec{named_scenario("dense-single-1"), {}};
    spec.schemes = {schemes.seeded};
    spec.runs = 20;
    spec.calibration_runs = 100;
    spec.seed = derive_seed(4, static_cast<std::uint64_t>(b));
    const ExperimentResult r = run_experiment(spec);
    bool ok = true;
    v.details << "batch " << b << ":";
    for (const BaselineSource src : {BaselineSource::known, BaselineSource::estimated}) {
      const auto lasso = summarize(r.outcomes.at({schemes.seeded.label, StatMethod::lasso, src}), 500);
      const auto ols = summarize(r.outcomes.at({schemes.seeded.label, StatMethod::ols, src}), 500);
      v.details << " " << to_string(src) << " lasso " << lasso.hausdorff_mean << " (empty "
                << lasso.empty_runs << ") ols " << ols.hausdorff_mean << " (empty "
                << ols.empty_runs << ");";
      ok = ok && lasso.hausdorff_mean <= ols.hausdorff_mean;
    }
    v.details << " ";
    ordered += ok ? 1 : 0;
  }
  v.details << "ordered in " << ordered << "/" << batches << " batches";
  v.require(ordered >= 4, "lasso <= ols in >= 4 of 5 batches");
  return v;
}

// 5. Counting two anomalies with greedy multiple selection.
Verdict criterion_5() {
  Verdict v;
  ExperimentSpec spec{named_scenario("dense-two-1"), {}};
  const double decay = seeded_decay_for_count(500, 11, 1944);
  const IntervalSet set = seeded_intervals(500, 11, decay, 1);
  spec.schemes = {{"seeded", set}};
  spec.methods = {StatMethod::lasso};
  spec.estimated_baseline = false;
  spec.multiple = true;
  spec.runs = 100;
  spec.calibration_runs = 100;
  const ExperimentResult r = run_experiment(spec);
  const auto& runs = r.outcomes.at({"seeded", StatMethod::lasso, BaselineSource::known});
  const auto counts = count_distribution(runs);
  int modal = -1, modal_runs = -1;
  for (const auto& [k, n] : counts) {
    if (n > modal_runs) {
      modal = k;
      modal_runs = n;
    }
  }
  int overlapping = 0;
  for (const auto& o : runs) {
    bool clash = false;
    for (std::size_t i = 0; i < o.estimate.size(); ++i) {
      for (std::size_t k = 0; k < i; ++k) clash = clash || o.estimate[i].overlaps(o.estimate[k]);
    }
    overlapping += clash ? 1 : 0;
  }
  const int two = counts.count(2) ? counts.at(2) : 0;
  v.details << "s=" << set.size() << ", counts:";
  for (const auto& [k, n] : counts) v.details << " " << k << "->" << n;
  v.details << ", runs with overlaps " << overlapping;
  v.require(modal == 2, "modal count 2");
  v.require(two >= 70, ">= 70 runs with exactly 2");
  v.require(overlapping == 0, "disjoint detections");
  return v;
}

// 6. Online monitoring.
Verdict criterion_6() {
  Verdict v;
  const int T = 400, onset = 200, runs = 100;
  const AnomalyScenario two = named_scenario("dense-two-1");
  const AnomalyScenario scenario(two.base(), two.segments()[0].delta, Interval{onset, T - 1}, T);
  const Matrix baseline = scenario.base().stacked();
  OnlineSettings settings;
  settings.lambda_horizon = T;
  const NullLaw null{scenario.base(), T, 200, std::nullopt};
  const CalibrationResult c = calibrate_online_threshold(null, settings, 200, 0.99, 61);
  std::vector<int> early(runs, 0);
  std::vector<double> delay(runs, std::numeric_limits<double>::infinity());
  parallel_for(runs, [&](int r) {
    const auto i = static_cast<std::size_t>(r);
    const TimeSeriesPanel stream = simulate_with_anomaly(scenario, derive_seed(6, i));
    const OnlineReport rep = detect_online(stream, baseline, 1, settings, c.threshold);
    if (!rep.alarm) return;
    if (rep.alarm->time < onset) {
      early[i] = 1;
    } else {
      delay[i] = rep.alarm->time - onset;
    }
  });
  const int clean = runs - static_cast<int>(std::count(early.begin(), early.end(), 1));
  std::vector<double> sorted = delay;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[runs / 2 - 1] + sorted[runs / 2]);
  const bool trace =
      online_windows(16, 1) == std::vector<Interval>{{15, 16}, {14, 16}, {12, 16}, {8, 16}};
  v.details << "threshold " << c.threshold << ", no early alarm in " << clean << "/" << runs
            << ", median delay " << median << ", t=16 windows " << (trace ? "match" : "differ");
  v.require(clean >= 90, "no alarm before onset in >= 90 runs");
  v.require(median <= 32.0, "median delay <= 32");
  v.require(trace, "window trace at t=16");
  return v;
}

// 7. Oracle equivalences.
Verdict criterion_7() {
  Verdict v;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int kron_bad = 0;
  double kron_err = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int p = 1 + rep % 3, len = 3 + rep % 8;
    const RegressionView view = random_view(rng, p, 1, len);
    const double lambda = 4.0 * unit(rng);
    const double ref = oracle::dense_lasso_statistic(
        oracle::kron(Matrix::Identity(p, p), view.predictors), view.response_vector(), lambda);
    const double err = std::abs(lasso_statistic(view, lambda).value - ref);
    kron_err = std::max(kron_err, err);
    kron_bad += err <= 1e-6 ? 0 : 1;
  }

  int scalar_bad = 0;
  double scalar_err = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double x = 0.1 + 3.0 * unit(rng), y = 10.0 * (unit(rng) - 0.5);
    const double lambda = 6.0 * unit(rng);
    // argmin (y - x b)^2 + lambda |b| = sign(xy) max(|xy| - lambda / 2, 0) / x^2
    const double xy = x * y;
    const double closed =
        (xy > 0 ? 1.0 : -1.0) * std::max(std::abs(xy) - lambda / 2.0, 0.0) / (x * x);
    const FitResult fit = lasso_solve(Matrix::Constant(1, 1, x), Vector::Constant(1, y), lambda);
    const double err = std::abs(fit.coefficients(0) - closed);
    scalar_err = std::max(scalar_err, err);
    scalar_bad += err <= 1e-10 ? 0 : 1;
  }

  int hausdorff_bad = 0;
  std::uniform_int_distribution<int> size(1, 8), point(1, 500);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> a(static_cast<std::size_t>(size(rng))), b(static_cast<std::size_t>(size(rng)));
    for (auto& x : a) x = point(rng);
    for (auto& x : b) x = point(rng);
    hausdorff_bad += hausdorff_distance(a, b, -1.0) == oracle::brute_hausdorff(a, b) ? 0 : 1;
  }

  int ols_bad = 0;
  double ols_err = 0.0;
  SolverOptions tight;
  tight.tolerance = 1e-13;
  tight.max_iterations = 1000000;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 1 + rep % 3, q = 1 + rep % 2;
    const RegressionView view = random_view(rng, p, q, p * q + 10 + rep % 15);
    const double ref = ols_statistic(view).value;
    const double err = std::abs(lasso_statistic(view, 0.0, tight).value - ref) / std::max(1.0, ref);
    ols_err = std::max(ols_err, err);
    ols_bad += err <= 1e-6 ? 0 : 1;
  }

  int kkt_bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 1 + rep % 3;
    const RegressionView view = random_view(rng, p, 1, 5 + rep % 10);
    const double bound =
        2.0 * (view.dense_design().transpose() * view.response_vector()).cwiseAbs().maxCoeff();
    const double lambda = rep % 4 == 0 ? bound : bound * (1.0 + unit(rng));
    kkt_bad += lasso_statistic(view, lambda).value == 0.0 ? 0 : 1;
  }

  v.details << "(a) " << 50 - kron_bad << "/50 max err " << kron_err << "; (b) " << 1000 - scalar_bad
            << "/1000 max err " << scalar_err << "; (c) " << 500 - hausdorff_bad << "/500; (d) "
            << 100 - ols_bad << "/100 max rel err " << ols_err << "; (e) " << 100 - kkt_bad
            << "/100";
  v.require(kron_bad == 0, "(a) Kronecker decoupling");
  v.require(scalar_bad == 0, "(b) scalar closed form");
  v.require(hausdorff_bad == 0, "(c) Hausdorff oracle");
  v.require(ols_bad == 0, "(d) lambda = 0 equals OLS");
  v.require(kkt_bad == 0, "(e) zero above the KKT bound");
  return v;
}

// 8. Monotonicity in lambda and per-sweep descent.
Verdict criterion_8() {
  Verdict v;
  std::mt19937_64 rng(8);
  int path_bad = 0, fits = 0, trace_bad = 0;
  SolverOptions opts;
  opts.record_objective = true;
  opts.tolerance = 1e-12;
  for (int rep = 0; rep < 100; ++rep) {
    const int p = 1 + rep % 3, q = 1 + rep % 2;
    const RegressionView view = random_view(rng, p, q, 6 + rep % 20);
    const Matrix x = view.dense_design();
    const Vector y = view.response_vector();
    const Matrix gram = x.transpose() * x;
    const Vector xty = x.transpose() * y;
    const double top = 2.2 * xty.cwiseAbs().maxCoeff();
    double prev = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int k = 0; k < 20; ++k) {
      const double lambda = top * k / 19.0;
      const double value = lasso_statistic(view, lambda).value;
      monotone = monotone && value <= prev + 1e-9 * std::max(1.0, prev);
      prev = value;
      for (const FitResult& fit :
           {lasso_solve(x, y, lambda, opts), lasso_solve_gram(gram, xty, y.squaredNorm(), lambda, opts)}) {
        ++fits;
        trace_bad += non_increasing(fit.objective_trace) ? 0 : 1;
      }
    }
    path_bad += monotone ? 0 : 1;
  }
  v.details << "monotone paths " << 100 - path_bad << "/100, descending traces " << fits - trace_bad
            << "/" << fits;
  v.require(path_bad == 0, "statistic non-increasing in lambda");
  v.require(trace_bad == 0, "objective non-increasing per sweep");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epivar acceptance suite"};
  int only = 0;
  app.add_option("--criterion", only, "criterion to run (default: all)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Verdict (*)()> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                            criterion_5, criterion_6, criterion_7, criterion_8};
  bool all = true;
  for (int n = 1; n <= 8; ++n) {
    if (only != 0 && n != only) continue;
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.details << "error: " << e.what();
    }
    std::cout << "CRITERION " << n << ": " << (v.pass ? "PASS" : "FAIL") << " "
              << v.details.str() << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
