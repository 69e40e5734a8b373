#include "cskm/scoring.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "cskm/error.h"
#include "cskm/rng.h"
#include "cskm/text.h"

namespace cskm {

ScoreRecord bilinear_score(std::string_view head, Relation relation, std::string_view tail,
                           const BilinearModel &model, std::string scorer_id) {
  ScoreRecord rec;
  rec.key = {std::string(head), relation, std::string(tail)};
  rec.scorer_id = std::move(scorer_id);
  rec.score = sigmoid(bilinear_logit(head, relation, tail, model));
  return rec;
}

double pmi_score(const PmiComponents &c) {
  if (!std::isfinite(c.logp_t_given_hr) || !std::isfinite(c.logp_t_given_r) ||
      !std::isfinite(c.logp_h_given_tr) || !std::isfinite(c.logp_h_given_r)) {
    throw ValidationError("PMI components must be finite");
  }
  const double forward = c.logp_t_given_hr - c.logp_t_given_r;
  const double backward = c.logp_h_given_tr - c.logp_h_given_r;
  return (forward + backward) / 2;
}

ScoreIngest ingest_external_scores(std::istream &in, std::string_view scorer_id,
                                   bool calibrated) {
  if (!in.good() && !in.eof()) throw InputError("cannot read score file");
  ScoreIngest result;
  ParseStats &stats = result.stats;
  auto reject = [&stats](std::size_t ParseStats::*reason) {
    ++stats.skipped;
    ++(stats.*reason);
  };

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    ++stats.rows;
    auto cols = split(line, '\t');
    if (cols.size() != 4 && cols.size() != 7) {
      reject(&ParseStats::malformed);
      continue;
    }
    auto relation = parse_relation(trim(cols[1]));
    if (!relation) {
      reject(&ParseStats::unknown_relation);
      continue;
    }
    auto head = trim(cols[0]);
    auto tail = trim(cols[2]);
    if (head.empty() || tail.empty()) {
      reject(&ParseStats::malformed);
      continue;
    }

    double score = 0;
    if (cols.size() == 4) {
      auto v = parse_double(cols[3]);
      if (!v || !std::isfinite(*v)) {
        reject(&ParseStats::malformed);
        continue;
      }
      score = *v;
    } else {
      std::array<double, 4> lp{};
      bool ok = true;
      for (std::size_t i = 0; i < 4; ++i) {
        auto v = parse_double(cols[3 + i]);
        if (!v || !std::isfinite(*v)) {
          ok = false;
          break;
        }
        lp[i] = *v;
      }
      if (!ok) {
        reject(&ParseStats::malformed);
        continue;
      }
      score = pmi_score({lp[0], lp[1], lp[2], lp[3]});
    }
    if (calibrated && (score < 0.0 || score > 1.0)) {
      ++stats.skipped;
      ++result.out_of_range;
      continue;
    }
    result.records.push_back({{std::string(head), *relation, std::string(tail)},
                              std::string(scorer_id), score});
    ++stats.parsed;
  }
  if (in.bad()) throw InputError("read failure in score file");
  return result;
}

void write_scores_tsv(std::ostream &out, const std::vector<ScoreRecord> &records) {
  for (const ScoreRecord &r : records) {
    out << r.key.head << '\t' << relation_name(r.key.relation) << '\t' << r.key.tail << '\t'
        << format_double(r.score) << '\n';
  }
}

std::vector<NegativeTriple> generate_negative_triples(const std::vector<Triple> &positives,
                                                      std::size_t count, std::uint64_t seed,
                                                      std::size_t max_attempts) {
  using LowerKey = std::tuple<std::string, Relation, std::string>;
  std::set<LowerKey> known;
  std::map<std::string, std::string> by_lower;  // lowercase -> first surface form
  for (const Triple &t : positives) {
    known.emplace(t.head_lower(), t.relation, t.tail_lower());
    by_lower.emplace(t.head_lower(), t.head);
    by_lower.emplace(t.tail_lower(), t.tail);
  }
  if (by_lower.size() < 2) {
    throw ValidationError("negative sampling needs at least two distinct entities, found " +
                          std::to_string(by_lower.size()));
  }
  std::vector<std::string> entities;
  entities.reserve(by_lower.size());
  for (auto &[lower, surface] : by_lower) entities.push_back(surface);

  Rng rng(seed);
  std::vector<NegativeTriple> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    bool drawn = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !drawn; ++attempt) {
      const std::size_t src = rng.uniform_index(positives.size());
      const Slot slot = rng.coin() ? Slot::kTail : Slot::kHead;
      const std::string &entity = entities[rng.uniform_index(entities.size())];

      Triple neg = positives[src];
      (slot == Slot::kHead ? neg.head : neg.tail) = entity;
      neg.confidence = 0.0;
      if (known.contains({neg.head_lower(), neg.relation, neg.tail_lower()})) continue;
      out.push_back({std::move(neg), src, slot});
      drawn = true;
    }
    if (!drawn) {
      throw Error("could not draw negative " + std::to_string(i) + " within " +
                  std::to_string(max_attempts) + " attempts");
    }
  }
  return out;
}

void write_negatives_tsv(std::ostream &out, const std::vector<NegativeTriple> &negatives) {
  for (const NegativeTriple &n : negatives) {
    out << relation_name(n.triple.relation) << '\t' << n.triple.head << '\t' << n.triple.tail
        << "\t0\n";
  }
}

std::vector<ScoreRecord> rank_candidates(const std::vector<ScoreRecord> &records,
                                         Relation relation) {
  std::vector<ScoreRecord> ranked;
  for (const ScoreRecord &r : records) {
    if (r.scorer_id != records.front().scorer_id) {
      throw ValidationError("cannot rank records from scorers '" + records.front().scorer_id +
                            "' and '" + r.scorer_id + "' together");
    }
    if (std::isnan(r.score)) throw ValidationError("NaN score for " + r.key.head);
    if (r.key.relation == relation) ranked.push_back(r);
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoreRecord &a, const ScoreRecord &b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.key.head != b.key.head) return a.key.head < b.key.head;
    return a.key.tail < b.key.tail;
  });
  return ranked;
}

SelectionCriterion SelectionCriterion::threshold(double theta) {
  SelectionCriterion c;
  c.mode = Mode::kThreshold;
  c.theta = theta;
  c.validate();
  return c;
}

SelectionCriterion SelectionCriterion::top(std::size_t n) {
  SelectionCriterion c;
  c.mode = Mode::kTopN;
  c.top_n = n;
  return c;
}

void SelectionCriterion::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw ValidationError("selection threshold must be in [0, 1], got " + format_double(theta));
  }
}

std::vector<ScoreRecord> select_qualified(const std::vector<ScoreRecord> &ranking,
                                          const SelectionCriterion &criterion) {
  std::vector<ScoreRecord> out;
  if (criterion.mode == SelectionCriterion::Mode::kTopN) {
    const std::size_t n = std::min(criterion.top_n, ranking.size());
    out.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    criterion.validate();
    std::copy_if(ranking.begin(), ranking.end(), std::back_inserter(out),
                 [&](const ScoreRecord &r) { return r.score >= criterion.theta; });
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n,
                                        std::uint64_t seed) {
  const std::size_t m = std::min(n, population);
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first m slots end up a uniform m-subset.
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + rng.uniform_index(population - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<ScoreRecord> sample_for_evaluation(const std::vector<ScoreRecord> &qualified,
                                               std::size_t n, std::uint64_t seed) {
  std::vector<ScoreRecord> out;
  for (std::size_t i : sample_indices(qualified.size(), n, seed)) out.push_back(qualified[i]);
  return out;
}

}  // namespace cskm
