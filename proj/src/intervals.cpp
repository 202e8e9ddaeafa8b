#include "epivar/intervals.hpp"

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "epivar/error.hpp"

namespace epivar {

std::ostream& operator<<(std::ostream& os, const Interval& interval) {
  return os << '[' << interval.start << ", " << interval.end << ']';
}

std::string IntervalSet::describe() const {
  std::ostringstream os;
  if (const auto* r = std::get_if<RandomProvenance>(&provenance)) {
    os << "random(seed=" << r->seed << ", count=" << r->count << ")";
  } else {
    os << "seeded(decay=" << std::get<SeededProvenance>(provenance).decay << ")";
  }
  os << " L=" << min_length << " domain=[" << first << ", " << last << "] size=" << size();
  return os.str();
}

namespace {

void check_domain(int horizon, int min_length, int order) {
  if (order < 0 || min_length < 1) {
    throw Error(ErrorKind::parameter, "minimum length must be positive and order non-negative");
  }
  if (min_length > horizon - order) {
    std::ostringstream msg;
    msg << "infeasible minimum length " << min_length << " for domain [" << order + 1 << ", "
        << horizon << "]";
    throw Error(ErrorKind::construction, msg.str());
  }
}

// ceil with a guard against values like 4.0000000000000009 from pow().
int guarded_ceil(double x) { return static_cast<int>(std::ceil(x - 1e-9)); }

}  // namespace

IntervalSet random_intervals(int horizon, int min_length, int count, std::uint64_t seed,
                             int order) {
  check_domain(horizon, min_length, order);
  if (count < 1) {
    throw Error(ErrorKind::parameter, "interval count must be at least 1");
  }
  IntervalSet set;
  set.min_length = min_length;
  set.first = order + 1;
  set.last = horizon;
  set.provenance = RandomProvenance{seed, count};
  set.intervals.reserve(static_cast<std::size_t>(count));

  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> start_dist(order + 1, horizon - min_length + 1);
    const int start = start_dist(rng);
    std::uniform_int_distribution<int> end_dist(start + min_length - 1, horizon);
    set.intervals.push_back({start, end_dist(rng)});
  }
  return set;
}

IntervalSet seeded_intervals(int horizon, int min_length, double decay, int order) {
  if (!(decay >= 0.5 && decay < 1.0)) {
    throw Error(ErrorKind::parameter, "decay must lie in [1/2, 1)");
  }
  check_domain(horizon, min_length, order);

  IntervalSet set;
  set.min_length = min_length;
  set.first = order + 1;
  set.last = horizon;
  set.provenance = SeededProvenance{decay};

  const int n = horizon - order;
  const int layers = std::max(1, guarded_ceil(std::log(static_cast<double>(n)) /
                                              std::log(1.0 / decay)));
  std::set<std::pair<int, int>> seen;
  for (int k = 1; k <= layers; ++k) {
    const int len = guarded_ceil(n * std::pow(decay, k - 1));
    if (len < min_length) {
      break;
    }
    const int count = 2 * guarded_ceil(std::pow(1.0 / decay, k - 1)) - 1;
    const int lo = order + 1;
    const int hi = horizon - len + 1;
    for (int i = 0; i < count; ++i) {
      const int start =
          count == 1 ? lo
                     : lo + static_cast<int>(std::lround(static_cast<double>(i) * (hi - lo) /
                                                         (count - 1)));
      if (seen.emplace(start, start + len - 1).second) {
        set.intervals.push_back({start, start + len - 1});
      }
    }
  }
  return set;
}

void write_intervals_csv(std::ostream& os, const IntervalSet& set) {
  os << "start,end\n";
  for (const auto& j : set.intervals) {
    os << j.start << ',' << j.end << '\n';
  }
}

double seeded_decay_for_count(int horizon, int min_length, int target, int order) {
  double best = 0.5;
  long best_gap = -1;
  for (int i = 0; i <= 490; ++i) {
    const double a = 0.5 + 0.001 * i;
    const long n = static_cast<long>(seeded_intervals(horizon, min_length, a, order).size());
    const long gap = std::abs(n - target);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best = a;
    }
  }
  return best;
}

}  // namespace epivar
