#ifndef CSKM_PATTERN_MINER_H_
#define CSKM_PATTERN_MINER_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cskm/pos_tagging.h"
#include "cskm/triple.h"

namespace cskm {

// Which concept of a triple a pattern describes.
enum class Slot { kHead, kTail };

std::string_view slot_name(Slot slot);
std::optional<Slot> parse_slot(std::string_view name);

struct PosPattern {
  std::vector<Upos> tags;

  // Comma-joined tag names, e.g. "VERB,CCONJ,VERB,NOUN".
  std::string canonical_form() const;
  // Inverse of canonical_form; throws ValidationError on an empty pattern or
  // unknown tag.
  static PosPattern parse(std::string_view canonical);

  bool operator==(const PosPattern &) const = default;
};

struct PatternCount {
  PosPattern pattern;
  std::size_t frequency = 0;

  bool operator==(const PatternCount &) const = default;
};

// Per-relation pattern frequencies, kept sorted by frequency descending and
// then canonical form ascending.
struct PatternTable {
  Slot side = Slot::kTail;
  // Set once select_top_k has been applied.
  std::optional<std::size_t> k;
  std::array<std::vector<PatternCount>, kRelationCount> entries;

  const std::vector<PatternCount> &patterns(Relation r) const {
    return entries[relation_index(r)];
  }
  std::vector<PatternCount> &patterns(Relation r) { return entries[relation_index(r)]; }

  bool operator==(const PatternTable &) const = default;
};

// Restores the canonical order of every relation's list.
void sort_canonically(PatternTable &table);

struct MiningOptions {
  Slot side = Slot::kTail;
  // Patterns with more tags than this are discarded.
  std::size_t max_length = 8;
};

// Tags the chosen slot of every triple (punctuation removed) and counts each
// resulting tag sequence once for the triple's relation.
PatternTable mine_patterns(const std::vector<Triple> &triples, const Tagger &tagger,
                           const MiningOptions &options = {});

PatternTable select_top_k(PatternTable table, std::size_t k);

// TSV "relation<TAB>canonical_form<TAB>frequency" in canonical order, preceded
// by a "# side=... k=..." comment line.
void write_pattern_table(std::ostream &out, const PatternTable &table);
PatternTable read_pattern_table(std::istream &in);

}  // namespace cskm

#endif  // CSKM_PATTERN_MINER_H_
