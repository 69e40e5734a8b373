#ifndef CSKM_NOVELTY_H_
#define CSKM_NOVELTY_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cskm/embeddings.h"
#include "cskm/triple.h"

namespace cskm {

// Sorted multiset of normalized word stems.
struct ConceptBag {
  std::vector<std::string> stems;

  // Stems joined with single spaces in sorted order.
  std::string canonical() const;
  bool empty() const { return stems.empty(); }
  bool operator==(const ConceptBag &) const = default;
};

// lowercase -> tokenize -> drop stopwords -> lemmatize -> Porter stem.
class NormalizationPipeline {
 public:
  NormalizationPipeline() = default;
  NormalizationPipeline(std::unordered_set<std::string> stopwords,
                        std::unordered_map<std::string, std::string> lemmas = {})
      : stopwords_(std::move(stopwords)), lemmas_(std::move(lemmas)) {}

  // Stopwords: one word per line. Lemmas: "word<TAB>lemma". '#' lines ignored.
  static NormalizationPipeline load(std::istream &stopwords, std::istream *lemmas);
  static NormalizationPipeline load_files(const std::string &stopwords_path,
                                          const std::string &lemmas_path);

  ConceptBag normalize(std::string_view text) const;

  bool is_stopword(std::string_view word) const;
  const std::string &lemma(const std::string &word) const;

 private:
  std::unordered_set<std::string> stopwords_;
  std::unordered_map<std::string, std::string> lemmas_;
};

inline ConceptBag normalize_concept(std::string_view text, const NormalizationPipeline &p) {
  return p.normalize(text);
}

struct NoveltyVerdict {
  bool novel = true;
  // A reference triple with the same normalized key; set iff !novel.
  std::optional<TripleKey> matched_reference;
};

// Exact-match index over normalized (relation, head bag, tail bag) keys, with a
// relation-agnostic (head bag, tail bag) key kept alongside. The first
// reference inserted under a key is its witness.
class ReferenceIndex {
 public:
  explicit ReferenceIndex(const NormalizationPipeline &pipeline) : pipeline_(&pipeline) {}

  void add(const TripleKey &reference);
  std::size_t size() const { return size_; }

  NoveltyVerdict lookup(const TripleKey &candidate, bool relation_agnostic) const;

 private:
  std::string pair_key(const TripleKey &t) const;

  const NormalizationPipeline *pipeline_;
  std::size_t size_ = 0;
  std::array<std::unordered_map<std::string, TripleKey>, kRelationCount> by_relation_;
  std::unordered_map<std::string, TripleKey> any_relation_;
};

ReferenceIndex build_reference_index(const std::vector<TripleKey> &references,
                                     const NormalizationPipeline &pipeline);

inline NoveltyVerdict is_novel(const TripleKey &candidate, const ReferenceIndex &index,
                               bool relation_agnostic) {
  return index.lookup(candidate, relation_agnostic);
}

struct NoveltyRate {
  std::size_t novel = 0;
  std::size_t total = 0;
  // novel / total, or 1 with empty_input set when there are no candidates.
  double rate = 1.0;
  bool empty_input = false;
};

NoveltyRate novelty_rate(const std::vector<TripleKey> &candidates, const ReferenceIndex &index,
                         bool relation_agnostic);

struct EmbeddingDistance {
  double distance = 0;
  std::size_t nearest = 0;  // index into references
  // True when a concept of the candidate or of the nearest reference had no
  // embedded words and was represented by the zero vector.
  bool zero_vector_used = false;
};

// min over references of |avg(head_c) - avg(head_r)| + |avg(tail_c) - avg(tail_r)|
// (Euclidean norms). Throws ValidationError for an empty reference set.
EmbeddingDistance embedding_novelty_distance(const TripleKey &candidate,
                                             const std::vector<TripleKey> &references,
                                             const EmbeddingTable &embeddings);

}  // namespace cskm

#endif  // CSKM_NOVELTY_H_
