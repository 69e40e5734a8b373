#ifndef CSKM_CONFIG_H_
#define CSKM_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cskm/corpus_ingest.h"
#include "cskm/pattern_miner.h"
#include "cskm/triple.h"

namespace cskm {

enum class ScorerType { kBilinear, kPmi, kExternal };

std::string_view scorer_type_name(ScorerType t);

struct ScorerConfig {
  std::string name;
  ScorerType type = ScorerType::kBilinear;
  // Bilinear model file, or the score / PMI component file.
  std::filesystem::path path;
  // Calibrated scorers are selected by threshold, others by top-N.
  bool calibrated = true;
};

// One run's settings. Relative paths in the file resolve against the file's
// directory.
struct PipelineConfig {
  // [inputs]
  std::filesystem::path kg_dump;
  std::filesystem::path training;  // optional
  std::filesystem::path definitions;
  DefinitionFormat definitions_format = DefinitionFormat::kAuto;
  std::filesystem::path pretagged;  // optional
  std::filesystem::path lexicon;
  std::filesystem::path suffix_rules;
  std::filesystem::path stopwords;
  std::filesystem::path lemmas;    // optional
  std::filesystem::path patterns;  // optional fixed pattern table

  // [ingest]
  std::string language = "en";
  std::string metadata_filter;
  bool restrict_to_kg_terms = true;

  // [patterns]
  std::size_t k = 15;
  Slot side = Slot::kTail;
  std::size_t max_pattern_length = 8;
  bool mine_from_training = false;

  // [selection]
  double theta = 0.9;
  std::size_t top_n = 1000;

  // [sample]
  std::size_t sample_n = 50;

  // [run]
  std::uint64_t seed = 13;
  std::vector<Relation> relations{kAllRelations.begin(), kAllRelations.end()};

  // [novelty]
  // Reference triple files replacing the graph and training set as the
  // primary novelty reference. Rows start relation, head, tail.
  std::vector<std::filesystem::path> novelty_references;
  // Primary verdict ignores the relation.
  bool relation_agnostic = false;
  bool embedding_distance = false;
  std::string embedding_scorer;  // bilinear scorer whose embeddings are used

  // [analysis]
  std::size_t histogram_bins = 10;

  // [negatives]
  std::size_t negatives_n = 1000;

  // [scorer.<name>] sections, in file order.
  std::vector<ScorerConfig> scorers;

  const ScorerConfig *find_scorer(std::string_view name) const;
  bool has_relation(Relation r) const;

  // Throws ValidationError naming the first bad setting or missing path.
  void validate() const;

  // Deterministic "section.key=value" listing of every effective setting.
  std::string canonical_text() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;

// Reads process environment variables.
std::optional<std::string> process_env(const std::string &name);

// INI file with [section] headers and key = value lines. Any setting can be
// overridden by CSKM_<SECTION>_<KEY> in upper case, with '.' in section names
// written as '_' (e.g. CSKM_SELECTION_THETA, CSKM_SCORER_KGBERT_SCORES).
// Throws InputError for an unreadable file and ValidationError for unknown
// keys or unparsable values. Does not call validate().
PipelineConfig load_config(const std::filesystem::path &path, const EnvLookup &env = process_env);

// Comma-separated relation labels; "all" selects all twelve.
std::vector<Relation> parse_relation_list(std::string_view text);

// Directory holding the bundled lexicon, suffix rules and stopword list.
std::filesystem::path default_data_dir();

}  // namespace cskm

#endif  // CSKM_CONFIG_H_
