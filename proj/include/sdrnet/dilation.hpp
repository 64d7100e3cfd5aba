#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sdrnet/common.hpp"

namespace sdrnet {

// A stack of equal-kernel dilated conv layers, innermost first.
struct DilationSchedule {
  std::vector<int> rates;
  int kernel_size = 3;
};

inline void validate_schedule(const DilationSchedule& s) {
  check(!s.rates.empty(), ErrorKind::InvalidArgument,
        "dilation schedule must contain at least one rate");
  for (int r : s.rates)
    check(r >= 1, ErrorKind::InvalidArgument,
          strf("dilation rate must be >= 1, got %d", r));
  check(s.kernel_size >= 1 && s.kernel_size % 2 == 1, ErrorKind::InvalidArgument,
        strf("kernel size must be odd and >= 1, got %d", s.kernel_size));
}

// Backward recurrence over the stack: the value at layer i bounds the largest
// run of input positions that layer can leave untouched, given what the layers
// above it already demand. Seeded with the top rate.
inline std::vector<int64_t> max_gap_sequence(const DilationSchedule& s) {
  validate_schedule(s);
  int n = static_cast<int>(s.rates.size());
  std::vector<int64_t> m(static_cast<size_t>(n));
  m[n - 1] = s.rates[n - 1];
  for (int i = n - 2; i >= 0; --i) {
    int64_t r = s.rates[i];
    int64_t up = m[i + 1];
    m[i] = std::max({up - 2 * r, 2 * r - up, r});
  }
  return m;
}

inline int64_t receptive_field(const DilationSchedule& s) {
  validate_schedule(s);
  int64_t sum = 0;
  for (int r : s.rates) sum += r;
  return 1 + static_cast<int64_t>(s.kernel_size - 1) * sum;
}

namespace detail {

constexpr int64_t kMaxCoverageExtent = 1 << 22;

inline int64_t coverage_extent(const DilationSchedule& s) {
  int64_t half = (s.kernel_size - 1) / 2;
  int64_t sum = 0;
  for (int r : s.rates) sum += r;
  return half * sum;
}

// Offsets reachable along one axis by composing the per-layer tap sets
// {-h..h} * r_i. Identity skips around each layer add the partial sums as
// well; with an odd kernel every tap set contains 0, so that union changes
// nothing, but the flag keeps the variant testable on its own.
inline std::vector<uint8_t> coverage_1d(const DilationSchedule& s,
                                        bool include_skips = true) {
  validate_schedule(s);
  int64_t extent = coverage_extent(s);
  check(extent <= kMaxCoverageExtent, ErrorKind::ResourceLimit,
        strf("coverage extent %lld exceeds limit %lld",
             static_cast<long long>(extent),
             static_cast<long long>(kMaxCoverageExtent)));
  int64_t side = 2 * extent + 1;
  std::vector<uint8_t> cur(static_cast<size_t>(side), 0);
  std::vector<uint8_t> nxt(static_cast<size_t>(side), 0);
  cur[static_cast<size_t>(extent)] = 1;
  int h = (s.kernel_size - 1) / 2;
  for (int r : s.rates) {
    std::fill(nxt.begin(), nxt.end(), 0);
    for (int64_t o = 0; o < side; ++o) {
      if (!cur[static_cast<size_t>(o)]) continue;
      if (include_skips) nxt[static_cast<size_t>(o)] = 1;
      for (int t = -h; t <= h; ++t) {
        int64_t p = o + static_cast<int64_t>(t) * r;
        if (p >= 0 && p < side) nxt[static_cast<size_t>(p)] = 1;
      }
    }
    cur.swap(nxt);
  }
  return cur;
}

}  // namespace detail

struct GriddingReport {
  std::vector<int64_t> max_gaps;  // recurrence values, innermost first
  int64_t m2 = 0;                 // value at the second layer (first when depth == 1)
  bool passes = false;
  int criterion_kernel = 3;
};

// The recurrence values are reported as-is, but the verdict is computed from
// the exact composed tap support. Thresholding m2 against the kernel size
// admits schedules like [2,2,2] whose taps land only on even offsets, and
// rejects ones like [1,2,5,1] that a final unit-rate layer has densified.
inline GriddingReport check_gridding(const DilationSchedule& s) {
  GriddingReport rep;
  rep.max_gaps = max_gap_sequence(s);
  rep.m2 = rep.max_gaps.size() >= 2 ? rep.max_gaps[1] : rep.max_gaps[0];
  rep.criterion_kernel = s.kernel_size;
  std::vector<uint8_t> cov = detail::coverage_1d(s);
  rep.passes = std::all_of(cov.begin(), cov.end(),
                           [](uint8_t v) { return v != 0; });
  return rep;
}

// Dense 2-D reachability map over [-extent, extent]^2.
struct CoverageGrid {
  int64_t extent = 0;
  std::vector<uint8_t> hits;  // row-major, side = 2*extent+1

  int64_t side() const { return 2 * extent + 1; }
  bool hit(int64_t dy, int64_t dx) const {
    if (dy < -extent || dy > extent || dx < -extent || dx > extent) return false;
    return hits[static_cast<size_t>((dy + extent) * side() + (dx + extent))] != 0;
  }
  int64_t hit_count() const {
    int64_t n = 0;
    for (uint8_t v : hits) n += v;
    return n;
  }
  int64_t unhit_count() const { return side() * side() - hit_count(); }
};

// The per-layer tap set is an axis-aligned grid, and composing layers takes
// sums of taps, so the 2-D support factors into the product of the 1-D
// coverage with itself.
inline CoverageGrid footprint(const DilationSchedule& s,
                              bool include_skips = true,
                              int64_t max_extent = 4096) {
  validate_schedule(s);
  int64_t extent = detail::coverage_extent(s);
  check(extent <= max_extent, ErrorKind::ResourceLimit,
        strf("footprint extent %lld exceeds cap %lld",
             static_cast<long long>(extent),
             static_cast<long long>(max_extent)));
  std::vector<uint8_t> cov = detail::coverage_1d(s, include_skips);
  CoverageGrid g;
  g.extent = extent;
  int64_t side = g.side();
  g.hits.assign(static_cast<size_t>(side * side), 0);
  for (int64_t y = 0; y < side; ++y) {
    if (!cov[static_cast<size_t>(y)]) continue;
    uint8_t* row = g.hits.data() + y * side;
    for (int64_t x = 0; x < side; ++x) row[x] = cov[static_cast<size_t>(x)];
  }
  return g;
}

inline std::string render_ascii(const CoverageGrid& g) {
  std::string out;
  int64_t side = g.side();
  out.reserve(static_cast<size_t>(side * (side + 1)));
  for (int64_t y = 0; y < side; ++y) {
    for (int64_t x = 0; x < side; ++x)
      out.push_back(g.hits[static_cast<size_t>(y * side + x)] ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline int64_t count_nondecreasing(int depth, int max_rate) {
  // C(max_rate + depth - 1, depth), saturating at a sentinel on overflow.
  long double v = 1.0L;
  for (int i = 1; i <= depth; ++i)
    v = v * static_cast<long double>(max_rate - 1 + i) / static_cast<long double>(i);
  if (v > 9.0e18L) return INT64_MAX;
  return static_cast<int64_t>(v + 0.5L);
}

}  // namespace detail

// All non-decreasing schedules of exactly `depth` rates in [1, max_rate]
// that pass the gridding check, widest receptive field first; ties keep
// lexicographic order.
inline std::vector<DilationSchedule> search_schedules(
    int depth, int max_rate, int kernel_size = 3,
    int64_t max_candidates = 1000000) {
  check(depth >= 1, ErrorKind::InvalidArgument,
        strf("search depth must be >= 1, got %d", depth));
  check(max_rate >= 1, ErrorKind::InvalidArgument,
        strf("max rate must be >= 1, got %d", max_rate));
  check(kernel_size >= 1 && kernel_size % 2 == 1, ErrorKind::InvalidArgument,
        strf("kernel size must be odd and >= 1, got %d", kernel_size));
  int64_t total = detail::count_nondecreasing(depth, max_rate);
  check(total <= max_candidates, ErrorKind::ResourceLimit,
        strf("search space has %lld candidates, limit is %lld",
             static_cast<long long>(total),
             static_cast<long long>(max_candidates)));

  std::vector<DilationSchedule> found;
  std::vector<int> rates(static_cast<size_t>(depth), 1);
  auto rec = [&](auto&& self, int pos, int lo) -> void {
    if (pos == depth) {
      DilationSchedule s{rates, kernel_size};
      if (check_gridding(s).passes) found.push_back(std::move(s));
      return;
    }
    for (int r = lo; r <= max_rate; ++r) {
      rates[static_cast<size_t>(pos)] = r;
      self(self, pos + 1, r);
    }
  };
  rec(rec, 0, 1);

  std::stable_sort(found.begin(), found.end(),
                   [](const DilationSchedule& a, const DilationSchedule& b) {
                     return receptive_field(a) > receptive_field(b);
                   });
  return found;
}

}  // namespace sdrnet
