#include "cskm/pos_tagging.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

namespace {

constexpr std::array<std::string_view, kUposCount> kUposNames = {
    "ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET",   "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",   "VERB", "X",
};

bool next_line(std::istream &in, std::string &line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

template <typename Fn>
void read_two_columns(std::istream &in, Fn &&fn) {
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    auto row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    auto cols = split(row, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty()) {
      throw ParseError("expected two tab-separated columns", line_no);
    }
    auto tag = parse_upos(trim(cols[1]));
    if (!tag) {
      throw ParseError("unknown UPOS tag '" + std::string(trim(cols[1])) + "'", line_no);
    }
    fn(trim(cols[0]), *tag);
  }
}

}  // namespace

std::string_view upos_name(Upos tag) {
  return kUposNames[static_cast<std::size_t>(tag)];
}

std::optional<Upos> parse_upos(std::string_view label) {
  for (std::size_t i = 0; i < kUposCount; ++i) {
    if (kUposNames[i] == label) return static_cast<Upos>(i);
  }
  return std::nullopt;
}

TagLexicon::TagLexicon(std::unordered_map<std::string, Upos> words,
                       std::vector<std::pair<std::string, Upos>> suffix_rules,
                       Upos default_tag)
    : words_(std::move(words)),
      suffix_rules_(std::move(suffix_rules)),
      default_tag_(default_tag) {
  std::stable_sort(suffix_rules_.begin(), suffix_rules_.end(),
                   [](const auto &a, const auto &b) {
                     return a.first.size() > b.first.size();
                   });
}

TagLexicon TagLexicon::load(std::istream &lexicon, std::istream *suffix_rules,
                            Upos default_tag) {
  std::unordered_map<std::string, Upos> words;
  read_two_columns(lexicon, [&](std::string_view word, Upos tag) {
    // First entry wins, so the file can list a word's dominant tag first.
    words.emplace(to_lower(word), tag);
  });
  std::vector<std::pair<std::string, Upos>> rules;
  if (suffix_rules != nullptr) {
    read_two_columns(*suffix_rules, [&](std::string_view suffix, Upos tag) {
      rules.emplace_back(to_lower(suffix), tag);
    });
  }
  return TagLexicon(std::move(words), std::move(rules), default_tag);
}

TagLexicon TagLexicon::load_files(const std::string &lexicon_path,
                                  const std::string &suffix_rules_path,
                                  Upos default_tag) {
  std::ifstream lex(lexicon_path);
  if (!lex) throw InputError("cannot open lexicon " + lexicon_path);
  if (suffix_rules_path.empty()) return load(lex, nullptr, default_tag);
  std::ifstream rules(suffix_rules_path);
  if (!rules) throw InputError("cannot open suffix rules " + suffix_rules_path);
  return load(lex, &rules, default_tag);
}

Upos TagLexicon::tag_word(std::string_view word) const {
  const std::string lower = to_lower(word);
  if (auto it = words_.find(lower); it != words_.end()) return it->second;
  for (const auto &[suffix, tag] : suffix_rules_) {
    if (lower.size() > suffix.size() && lower.ends_with(suffix)) return tag;
  }
  return default_tag_;
}

TaggedSequence tag_phrase(std::string_view phrase, const TagLexicon &lexicon) {
  TaggedSequence out;
  for (Token &t : tokenize(phrase)) {
    Upos tag = t.punct ? Upos::PUNCT : lexicon.tag_word(t.text);
    out.push_back({std::move(t.text), tag});
  }
  return out;
}

std::map<std::string, TaggedSequence> load_pretagged(std::istream &in) {
  std::map<std::string, TaggedSequence> sequences;
  std::set<std::string> closed;
  std::string current;
  bool open = false;

  auto close_current = [&] {
    if (open) closed.insert(current);
    open = false;
  };

  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      close_current();
      continue;
    }
    auto cols = split(line, '\t');
    if (cols.size() != 3 || cols[0].empty() || cols[1].empty()) {
      throw ParseError("expected source_id<TAB>token<TAB>upos", line_no);
    }
    auto tag = parse_upos(cols[2]);
    if (!tag) {
      throw ParseError("unknown UPOS tag '" + std::string(cols[2]) + "'", line_no);
    }
    std::string id(cols[0]);
    if (open && id != current) close_current();
    if (!open) {
      if (closed.contains(id)) {
        throw ParseError("source_id '" + id + "' appears in two sentences", line_no);
      }
      current = id;
      open = true;
    }
    sequences[id].push_back({std::string(cols[1]), *tag});
  }
  if (in.bad()) throw InputError("read failure in pre-tagged corpus");
  return sequences;
}

void write_pretagged(std::ostream &out,
                     const std::map<std::string, TaggedSequence> &sequences) {
  for (const auto &[id, tokens] : sequences) {
    for (const TaggedToken &t : tokens) {
      out << id << '\t' << t.text << '\t' << upos_name(t.tag) << '\n';
    }
    out << '\n';
  }
}

TaggedSequence Tagger::tag(std::string_view source_id, std::string_view text) const {
  if (auto it = pretagged_.find(std::string(source_id)); it != pretagged_.end()) return it->second;
  return tag_phrase(text, lexicon_);
}

bool Tagger::has_pretagged(std::string_view source_id) const {
  return pretagged_.find(std::string(source_id)) != pretagged_.end();
}

}  // namespace cskm
