#ifndef CSKM_CANDIDATE_EXTRACTOR_H_
#define CSKM_CANDIDATE_EXTRACTOR_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cskm/corpus_ingest.h"
#include "cskm/pattern_miner.h"
#include "cskm/pos_tagging.h"
#include "cskm/triple.h"

namespace cskm {

// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenSpan &) const = default;
};

// A defined term paired with a pattern-matched span of its definition.
struct CandidateTriple {
  std::string head;
  Relation relation = Relation::kAtLocation;
  std::string tail;
  std::string term;
  int sense_index = 0;
  std::string source_id;
  PosPattern pattern;
  TokenSpan span;

  TripleKey key() const { return {head, relation, tail}; }
  bool operator==(const CandidateTriple &) const = default;
};

// Candidates per relation, indexed by relation_index.
using CandidateSet = std::array<std::vector<CandidateTriple>, kRelationCount>;

// Every window whose tags equal the pattern, left to right, overlaps included.
// Throws ValidationError for an empty pattern.
std::vector<TokenSpan> match_spans(const TaggedSequence &tokens, const PosPattern &pattern);

// Single-space join of the token texts in span.
std::string span_text(const TaggedSequence &tokens, TokenSpan span);

// Byte range [begin, end) of span inside text, found by locating each token
// in order after the previous one. nullopt if a token cannot be found or the
// span lies outside tokens.
std::optional<std::pair<std::size_t, std::size_t>> span_char_range(std::string_view text,
                                                                  const TaggedSequence &tokens,
                                                                  TokenSpan span);

// For each relation, definition, pattern and span (in that nesting order)
// emits (term, relation, span text). Self-loops (tail equals head ignoring
// case) are dropped, as are repeats of a (head, tail) pair within a relation
// compared case-insensitively. Throws ValidationError naming the source_id of
// a definition with no token sequence.
CandidateSet extract_candidates(const std::vector<TermDefinition> &definitions,
                                const std::map<std::string, TaggedSequence> &tagged,
                                const PatternTable &patterns);

std::size_t candidate_count(const CandidateSet &set);

// JSON lines with head, relation, tail, term, sense_index, source_id, pattern, span.
void write_candidates_jsonl(std::ostream &out, const CandidateSet &set);
CandidateSet read_candidates_jsonl(std::istream &in);

// "head<TAB>relation<TAB>tail" rows for external scorers.
void write_candidates_tsv(std::ostream &out, const CandidateSet &set);

}  // namespace cskm

#endif  // CSKM_CANDIDATE_EXTRACTOR_H_
