#ifndef CSKM_SCORING_H_
#define CSKM_SCORING_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cskm/bilinear_model.h"
#include "cskm/corpus_ingest.h"
#include "cskm/pattern_miner.h"
#include "cskm/triple.h"

namespace cskm {

struct ScoreRecord {
  TripleKey key;
  std::string scorer_id;
  double score = 0;

  bool operator==(const ScoreRecord &) const = default;
};

// sigmoid(u1' M_R u2); always in (0, 1).
ScoreRecord bilinear_score(std::string_view head, Relation relation, std::string_view tail,
                           const BilinearModel &model, std::string scorer_id = "bilinear");

// Natural-log conditional probabilities produced by a masked language model.
struct PmiComponents {
  double logp_t_given_hr = 0;
  double logp_t_given_r = 0;
  double logp_h_given_tr = 0;
  double logp_h_given_r = 0;
};

// Mean of PMI(t, h | r) and PMI(h, t | r). Uncalibrated. Throws
// ValidationError if any component is not finite.
double pmi_score(const PmiComponents &c);

// Rows "head<TAB>relation<TAB>tail<TAB>score", or with four log-probability
// columns in place of the score, which are combined with pmi_score. For
// calibrated scorers, scores outside [0, 1] are rejected and counted.
struct ScoreIngest {
  std::vector<ScoreRecord> records;
  ParseStats stats;
  std::size_t out_of_range = 0;
};
ScoreIngest ingest_external_scores(std::istream &in, std::string_view scorer_id,
                                   bool calibrated);

void write_scores_tsv(std::ostream &out, const std::vector<ScoreRecord> &records);

struct NegativeTriple {
  Triple triple;
  std::size_t source_index = 0;  // into the positives vector
  Slot replaced = Slot::kHead;
};

// Corrupts uniformly drawn positives by replacing the head or tail (fair coin)
// with a uniformly drawn entity from the positives' entity vocabulary.
// Corruptions equal to any positive (compared case-insensitively) are redrawn,
// up to max_attempts per negative. Deterministic for a given seed.
// Throws ValidationError if the vocabulary has fewer than two entities and
// Error if a negative cannot be drawn within max_attempts.
std::vector<NegativeTriple> generate_negative_triples(const std::vector<Triple> &positives,
                                                      std::size_t count, std::uint64_t seed,
                                                      std::size_t max_attempts = 1000);

// Training-set layout with confidence 0.
void write_negatives_tsv(std::ostream &out, const std::vector<NegativeTriple> &negatives);

// Records of one relation, by score descending, then head and tail ascending.
// Throws ValidationError when the records come from more than one scorer or a
// score is NaN.
std::vector<ScoreRecord> rank_candidates(const std::vector<ScoreRecord> &records,
                                         Relation relation);

struct SelectionCriterion {
  enum class Mode { kThreshold, kTopN };

  Mode mode = Mode::kThreshold;
  double theta = 0.9;
  std::size_t top_n = 1000;

  static SelectionCriterion threshold(double theta = 0.9);
  static SelectionCriterion top(std::size_t n = 1000);

  // Throws ValidationError unless theta is in [0, 1].
  void validate() const;
};

// Threshold mode keeps score >= theta; top-N mode keeps the first N.
std::vector<ScoreRecord> select_qualified(const std::vector<ScoreRecord> &ranking,
                                          const SelectionCriterion &criterion);

// Indices of a uniform sample without replacement of min(n, population)
// items, ascending.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n,
                                        std::uint64_t seed);

// Sample of the qualified list, kept in ranking order.
std::vector<ScoreRecord> sample_for_evaluation(const std::vector<ScoreRecord> &qualified,
                                               std::size_t n, std::uint64_t seed);

}  // namespace cskm

#endif  // CSKM_SCORING_H_
