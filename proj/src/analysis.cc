#include "cskm/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

double Histogram::bin_lo(std::size_t i) const {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
}

double Histogram::bin_hi(std::size_t i) const {
  return i + 1 == counts.size() ? hi : bin_lo(i + 1);
}

std::size_t Histogram::in_range() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram histogram(const std::vector<double> &scores, std::size_t bin_count,
                    std::optional<std::pair<double, double>> range) {
  if (bin_count == 0) throw ValidationError("histogram needs at least one bin");
  Histogram h;
  if (range) {
    h.lo = range->first;
    h.hi = range->second;
  } else {
    bool any = false;
    for (double s : scores) {
      if (std::isnan(s)) continue;
      h.lo = any ? std::min(h.lo, s) : s;
      h.hi = any ? std::max(h.hi, s) : s;
      any = true;
    }
    if (!any) throw ValidationError("cannot derive a histogram range from no scores");
    if (h.lo == h.hi) {
      h.lo -= 0.5;
      h.hi += 0.5;
    }
  }
  if (!(h.lo < h.hi)) throw ValidationError("histogram range must satisfy lo < hi");

  h.counts.assign(bin_count, 0);
  const double width = h.hi - h.lo;
  for (double s : scores) {
    if (!(s >= h.lo && s <= h.hi)) {
      ++h.out_of_range;
      continue;
    }
    auto bin = static_cast<std::size_t>(std::floor((s - h.lo) * static_cast<double>(bin_count) / width));
    ++h.counts[std::min(bin, bin_count - 1)];
  }
  return h;
}

void write_histogram_csv(std::ostream &out, const Histogram &h) {
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_double(h.bin_lo(i)) << ',' << format_double(h.bin_hi(i)) << ','
        << h.counts[i] << '\n';
  }
}

namespace {

// Sum over groups of equal adjacent values of t(t-1)/2.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq &&equal) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Stable merge sort of v by value, returning the number of inversions
// (pairs i < j with v[i] > v[j]).
std::int64_t sort_counting_inversions(std::vector<double> &v) {
  std::int64_t swaps = 0;
  std::vector<double> buf(v.size());
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          buf[k++] = v[j++];
          swaps += static_cast<std::int64_t>(mid - i);
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    v.swap(buf);
  }
  return swaps;
}

}  // namespace

double kendall_tau_b(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size()) throw ValidationError("kendall tau needs paired samples");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("kendall tau needs at least two pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_x = tied_pairs(n, [&](std::size_t a, std::size_t b) { return xs[a] == xs[b]; });
  const std::int64_t ties_xy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return xs[a] == xs[b] && ys[a] == ys[b];
  });
  const std::int64_t discordant = sort_counting_inversions(ys);
  const std::int64_t ties_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const std::int64_t numerator = n0 - ties_x - ties_y + ties_xy - 2 * discordant;
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  if (denom == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(numerator) / denom;
}

TauResult kendall_tau(const std::vector<ScoreRecord> &a, const std::vector<ScoreRecord> &b) {
  std::unordered_map<TripleKey, double, TripleKeyHash> first;
  for (const ScoreRecord &r : a) first.try_emplace(r.key, r.score);
  std::unordered_map<TripleKey, double, TripleKeyHash> second;
  std::vector<double> x, y;
  for (const ScoreRecord &r : b) {
    if (!second.try_emplace(r.key, r.score).second) continue;
    auto it = first.find(r.key);
    if (it == first.end()) continue;
    x.push_back(it->second);
    y.push_back(r.score);
  }
  if (x.size() < 2) {
    throw ValidationError("kendall tau needs at least two shared triples, found " +
                          std::to_string(x.size()));
  }
  return {kendall_tau_b(x, y), x.size()};
}

EvaluationSummary summarize_annotations(const std::vector<AnnotationLabel> &labels,
                                        const std::vector<SampleRegistration> &samples) {
  using Cell = std::pair<Relation, std::string>;
  struct CellState {
    const SampleRegistration *sample = nullptr;
    std::set<TripleKey> keys;
    // (triple, annotator) -> (valid, novel), last write wins.
    std::map<std::pair<TripleKey, std::string>, std::pair<bool, bool>> judgments;
  };
  std::map<Cell, CellState> cells;
  for (const SampleRegistration &s : samples) {
    CellState &c = cells[{s.relation, s.scorer_id}];
    c.sample = &s;
    c.keys.insert(s.keys.begin(), s.keys.end());
  }

  EvaluationSummary summary;
  for (const AnnotationLabel &l : labels) {
    auto it = cells.find({l.key.relation, l.scorer_id});
    if (it == cells.end() || !it->second.keys.contains(l.key)) {
      ++summary.rejected;
      continue;
    }
    it->second.judgments[{l.key, l.annotator}] = {l.valid, l.novel};
  }

  for (const auto &[cell, state] : cells) {
    SummaryRow row;
    row.relation = cell.first;
    row.scorer_id = cell.second;
    row.qualified_count = state.sample->qualified_count;
    row.sample_size = state.keys.size();
    std::set<std::string> annotators;
    for (const auto &[who, judgment] : state.judgments) {
      annotators.insert(who.second);
      ++row.labels;
      if (judgment.first) {
        ++row.valid;
        if (judgment.second) ++row.valid_novel;
      }
    }
    row.annotators = annotators.size();
    const std::size_t denom = row.sample_size * std::max<std::size_t>(1, row.annotators);
    if (denom > 0) {
      row.validity = static_cast<double>(row.valid) / static_cast<double>(denom);
      row.valid_and_novel = static_cast<double>(row.valid_novel) / static_cast<double>(denom);
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

void write_summary_csv(std::ostream &out, const EvaluationSummary &summary) {
  out << "Relation,scorer,Qual.,V.,V.N.\n";
  for (const SummaryRow &r : summary.rows) {
    out << relation_name(r.relation) << ',' << r.scorer_id << ',' << r.qualified_count << ','
        << format_double(r.validity) << ',' << format_double(r.valid_and_novel) << '\n';
  }
}

ValidCountEstimate estimate_valid_count(std::size_t qualified_count, double validity) {
  if (!(validity >= 0.0 && validity <= 1.0)) {
    throw ValidationError("validity proportion must be in [0, 1]");
  }
  return {qualified_count, validity, static_cast<double>(qualified_count) * validity};
}

}  // namespace cskm
