#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace epivar {

/// Closed, 1-based time window [start, end].
struct Interval {
  int start = 1;
  int end = 1;

  int length() const noexcept { return end - start + 1; }
  bool contains(int t) const noexcept { return start <= t && t <= end; }
  bool contains(const Interval& other) const noexcept {
    return start <= other.start && other.end <= end;
  }
  bool overlaps(const Interval& other) const noexcept {
    return start <= other.end && other.start <= end;
  }

  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

std::ostream& operator<<(std::ostream& os, const Interval& interval);

struct RandomProvenance {
  std::uint64_t seed = 0;
  int count = 0;
};

struct SeededProvenance {
  double decay = 0.5;
};

using IntervalProvenance = std::variant<RandomProvenance, SeededProvenance>;

/// Candidate windows with a common minimum length, all inside [first, last].
struct IntervalSet {
  std::vector<Interval> intervals;
  int min_length = 1;
  int first = 1;
  int last = 1;
  IntervalProvenance provenance;

  std::size_t size() const noexcept { return intervals.size(); }
  std::string describe() const;
};

/// `count` windows over [order + 1, horizon]: start uniform on
/// [order + 1, horizon - min_length + 1], then end uniform on
/// [start + min_length - 1, horizon]. Sampling is with replacement.
IntervalSet random_intervals(int horizon, int min_length, int count, std::uint64_t seed,
                             int order = 0);

/// Layered deterministic construction over [order + 1, horizon]. Layer k holds
/// 2 * ceil((1/decay)^(k-1)) - 1 evenly shifted windows of length
/// ceil(n * decay^(k-1)), n = horizon - order; layers end once the length
/// drops below `min_length`. Duplicates are dropped, first occurrence kept.
IntervalSet seeded_intervals(int horizon, int min_length, double decay, int order = 0);

/// Decay on the grid 0.500, 0.501, ..., 0.990 whose seeded set size is
/// closest to `target` (smallest decay wins ties).
double seeded_decay_for_count(int horizon, int min_length, int target, int order = 1);

/// Two-column CSV with a `start,end` header.
void write_intervals_csv(std::ostream& os, const IntervalSet& set);

}  // namespace epivar
