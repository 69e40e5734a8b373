#ifndef CSKM_ANALYSIS_H_
#define CSKM_ANALYSIS_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cskm/scoring.h"
#include "cskm/triple.h"

namespace cskm {

// Equal-width bins over [lo, hi]; the last bin is closed on the right.
struct Histogram {
  double lo = 0;
  double hi = 1;
  std::vector<std::size_t> counts;
  // Scores below lo, above hi, or NaN.
  std::size_t out_of_range = 0;

  double bin_lo(std::size_t i) const;
  double bin_hi(std::size_t i) const;
  std::size_t in_range() const;
};

// Without a range the data's (min, max) is used; a single repeated value v
// gets (v - 0.5, v + 0.5). Throws ValidationError for bin_count == 0,
// lo >= hi, or empty input without a range.
Histogram histogram(const std::vector<double> &scores, std::size_t bin_count = 10,
                    std::optional<std::pair<double, double>> range = std::nullopt);

// "bin_lo,bin_hi,count" rows, header first.
void write_histogram_csv(std::ostream &out, const Histogram &h);

// Tie-corrected Kendall tau-b of paired samples, O(n log n). Returns NaN when
// either side is constant. Throws ValidationError if sizes differ or n < 2.
double kendall_tau_b(const std::vector<double> &x, const std::vector<double> &y);

struct TauResult {
  double tau = 0;
  std::size_t pairs = 0;  // size of the key intersection
};

// tau-b over the triples both scorers scored. A key scored twice by the same
// scorer uses its first score. Throws ValidationError if fewer than two keys
// are shared.
TauResult kendall_tau(const std::vector<ScoreRecord> &a, const std::vector<ScoreRecord> &b);

// One human judgment of a sampled triple.
struct AnnotationLabel {
  TripleKey key;
  std::string scorer_id;
  std::string annotator;
  bool valid = false;
  bool novel = false;
};

// The sample drawn for one (relation, scorer) cell.
struct SampleRegistration {
  Relation relation = Relation::kAtLocation;
  std::string scorer_id;
  std::size_t qualified_count = 0;
  std::vector<TripleKey> keys;
};

struct SummaryRow {
  Relation relation = Relation::kAtLocation;
  std::string scorer_id;
  std::size_t qualified_count = 0;
  std::size_t sample_size = 0;
  std::size_t annotators = 0;
  std::size_t labels = 0;
  std::size_t valid = 0;
  std::size_t valid_novel = 0;
  double validity = 0;             // V.
  double valid_and_novel = 0;      // V.N.
};

struct EvaluationSummary {
  // Ordered by relation, then scorer_id.
  std::vector<SummaryRow> rows;
  std::size_t rejected = 0;
};

// V. = valid / (sample size x annotators), V.N. = (valid and novel) / same
// denominator. A repeated (triple, annotator) label replaces the earlier one.
// Labels for triples outside every registered sample are counted in rejected.
EvaluationSummary summarize_annotations(const std::vector<AnnotationLabel> &labels,
                                        const std::vector<SampleRegistration> &samples);

// Relation,scorer,Qual.,V.,V.N.
void write_summary_csv(std::ostream &out, const EvaluationSummary &summary);

struct ValidCountEstimate {
  std::size_t qualified_count = 0;
  double validity = 0;
  double estimate = 0;
};

// qualified_count x validity. Throws ValidationError if validity is outside [0, 1].
ValidCountEstimate estimate_valid_count(std::size_t qualified_count, double validity);

}  // namespace cskm

#endif  // CSKM_ANALYSIS_H_
