#ifndef CSKM_CORPUS_INGEST_H_
#define CSKM_CORPUS_INGEST_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cskm/triple.h"

namespace cskm {

// Row accounting for a single parse. Every non-blank input line is a row and
// ends up either parsed or skipped, so parsed + skipped == rows.
struct ParseStats {
  std::size_t rows = 0;
  std::size_t parsed = 0;
  std::size_t skipped = 0;

  // Breakdown of skipped rows.
  std::size_t malformed = 0;
  std::size_t unknown_relation = 0;
  std::size_t filtered = 0;       // language or metadata filter
  std::size_t morphological = 0;  // definitions only
  std::size_t duplicate = 0;      // definitions only
  std::size_t not_whitelisted = 0;

  std::vector<std::string> warnings;
};

template <typename T>
struct Parsed {
  std::vector<T> items;
  ParseStats stats;
};

struct KgDumpOptions {
  // Two-letter language code both concepts must carry.
  std::string language = "en";
  // When non-empty, the metadata column must contain this substring.
  std::string metadata_filter;
  // Provenance prefix written into Triple::source.
  std::string source_name = "kg";
};

// Parses ConceptNet-style assertion rows:
//   URI <TAB> /r/Relation <TAB> /c/lang/start[/...] <TAB> /c/lang/end[/...] <TAB> metadata
// Throws InputError if the stream cannot be read. Rows that do not parse, fall
// outside the twelve relations, or fail the filters are counted and skipped.
Parsed<Triple> parse_kg_dump(std::istream &in, const KgDumpOptions &options);

// Decodes "/c/en/mix_drink/v" to {"en", "mix drink"}; nullopt if not a concept URI.
struct ConceptUri {
  std::string language;
  std::string text;
};
std::optional<ConceptUri> decode_concept_uri(std::string_view uri);

// Rows "relation <TAB> head <TAB> tail <TAB> confidence".
Parsed<Triple> load_training_triples(std::istream &in,
                                     std::string_view source_name = "train");

// True iff the lowercased text contains one of the four morphology phrases.
bool is_morphological(std::string_view definition_text);

struct TermDefinition {
  std::string term;
  std::string pos;
  int sense_index = 0;
  std::string definition_text;
  // "<term>#<sense_index>"; keys pre-tagged token sequences.
  std::string source_id;

  bool operator==(const TermDefinition &) const = default;
};

std::string make_source_id(std::string_view term, int sense_index);

enum class DefinitionFormat { kAuto, kJsonLines, kTsv };

struct DefinitionLoadOptions {
  DefinitionFormat format = DefinitionFormat::kAuto;
  // Lowercased terms to keep. Absent means keep everything.
  std::optional<std::unordered_set<std::string>> whitelist;
};

// Loads (term, pos, gloss) records from JSON lines ({"term","pos","gloss"}) or
// a three-column TSV. Drops morphological glosses, records outside the
// whitelist and duplicate (term, gloss) pairs, then numbers the surviving
// senses of each term in input order.
Parsed<TermDefinition> load_definitions(std::istream &in,
                                        const DefinitionLoadOptions &options);

// Lowercased heads and tails, the term set definitions are restricted to.
std::unordered_set<std::string> concept_vocabulary(const std::vector<Triple> &triples);

// Canonical triple TSV: relation, head, tail, source, plus a fifth confidence
// column for rows that carry one.
void write_triples_tsv(std::ostream &out, const std::vector<Triple> &triples);
Parsed<Triple> read_triples_tsv(std::istream &in);

// Canonical definitions TSV: term, sense_index, gloss.
void write_definitions_tsv(std::ostream &out,
                           const std::vector<TermDefinition> &definitions);
std::vector<TermDefinition> read_definitions_tsv(std::istream &in);

}  // namespace cskm

#endif  // CSKM_CORPUS_INGEST_H_
