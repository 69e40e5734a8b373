#ifndef CSKM_POS_TAGGING_H_
#define CSKM_POS_TAGGING_H_

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cskm {

// Universal POS tags.
enum class Upos {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM,
  PART, PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X,
};

inline constexpr std::size_t kUposCount = 17;

std::string_view upos_name(Upos tag);
std::optional<Upos> parse_upos(std::string_view label);

struct TaggedToken {
  std::string text;
  Upos tag = Upos::X;

  bool operator==(const TaggedToken &) const = default;
};

using TaggedSequence = std::vector<TaggedToken>;

// Deterministic fallback tagger: exact lexicon lookup on the lowercased word,
// then the longest matching suffix rule, then the default tag. Punctuation
// tokens are always PUNCT.
class TagLexicon {
 public:
  TagLexicon() = default;
  TagLexicon(std::unordered_map<std::string, Upos> words,
             std::vector<std::pair<std::string, Upos>> suffix_rules,
             Upos default_tag = Upos::NOUN);

  // Lexicon: "word<TAB>tag"; suffix rules: "suffix<TAB>tag" in priority order.
  // '#' lines and blank lines are ignored. Throws ParseError on bad rows.
  static TagLexicon load(std::istream &lexicon, std::istream *suffix_rules,
                         Upos default_tag = Upos::NOUN);
  static TagLexicon load_files(const std::string &lexicon_path,
                               const std::string &suffix_rules_path,
                               Upos default_tag = Upos::NOUN);

  Upos tag_word(std::string_view word) const;
  Upos default_tag() const { return default_tag_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, Upos> words_;
  // Sorted by suffix length descending; equal lengths keep file order.
  std::vector<std::pair<std::string, Upos>> suffix_rules_;
  Upos default_tag_ = Upos::NOUN;
};

TaggedSequence tag_phrase(std::string_view phrase, const TagLexicon &lexicon);

// CoNLL-style rows "source_id<TAB>token<TAB>upos"; a blank line or a change of
// source_id ends a sentence. Throws ParseError naming the line for malformed
// rows, unknown tags, or a source_id that reappears after its sentence ended.
std::map<std::string, TaggedSequence> load_pretagged(std::istream &in);

void write_pretagged(std::ostream &out,
                     const std::map<std::string, TaggedSequence> &sequences);

// Tagging facility shared by pattern mining and extraction. Pre-tagged
// sequences take precedence over the lexicon for their source_id.
class Tagger {
 public:
  explicit Tagger(TagLexicon lexicon,
                  std::map<std::string, TaggedSequence> pretagged = {})
      : lexicon_(std::move(lexicon)), pretagged_(std::move(pretagged)) {}

  TaggedSequence tag(std::string_view source_id, std::string_view text) const;
  bool has_pretagged(std::string_view source_id) const;

 private:
  TagLexicon lexicon_;
  std::map<std::string, TaggedSequence> pretagged_;
};

}  // namespace cskm

#endif  // CSKM_POS_TAGGING_H_
