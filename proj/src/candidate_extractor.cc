#include "cskm/candidate_extractor.h"

#include <istream>
#include <ostream>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

std::vector<TokenSpan> match_spans(const TaggedSequence &tokens, const PosPattern &pattern) {
  if (pattern.tags.empty()) throw ValidationError("cannot match an empty POS pattern");
  std::vector<TokenSpan> spans;
  const std::size_t len = pattern.tags.size();
  if (len > tokens.size()) return spans;
  for (std::size_t start = 0; start + len <= tokens.size(); ++start) {
    bool match = true;
    for (std::size_t i = 0; i < len; ++i) {
      if (tokens[start + i].tag != pattern.tags[i]) {
        match = false;
        break;
      }
    }
    if (match) spans.push_back({start, start + len});
  }
  return spans;
}

std::string span_text(const TaggedSequence &tokens, TokenSpan span) {
  std::string out;
  for (std::size_t i = span.begin; i < span.end; ++i) {
    if (i > span.begin) out += ' ';
    out += tokens[i].text;
  }
  return out;
}

std::optional<std::pair<std::size_t, std::size_t>> span_char_range(std::string_view text,
                                                                  const TaggedSequence &tokens,
                                                                  TokenSpan span) {
  if (span.begin >= span.end || span.end > tokens.size()) return std::nullopt;
  std::size_t cursor = 0;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < span.end; ++i) {
    const std::string &t = tokens[i].text;
    std::size_t at = text.find(t, cursor);
    if (t.empty() || at == std::string_view::npos) return std::nullopt;
    if (i == span.begin) begin = at;
    cursor = at + t.size();
  }
  return std::pair{begin, cursor};
}

CandidateSet extract_candidates(const std::vector<TermDefinition> &definitions,
                                const std::map<std::string, TaggedSequence> &tagged,
                                const PatternTable &patterns) {
  std::vector<const TaggedSequence *> sequences;
  sequences.reserve(definitions.size());
  for (const TermDefinition &d : definitions) {
    auto it = tagged.find(d.source_id);
    if (it == tagged.end()) {
      throw ValidationError("definition '" + d.source_id + "' has no token sequence");
    }
    sequences.push_back(&it->second);
  }

  CandidateSet out;
  for (Relation r : kAllRelations) {
    const auto &relation_patterns = patterns.patterns(r);
    if (relation_patterns.empty()) continue;
    auto &bucket = out[relation_index(r)];
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t d = 0; d < definitions.size(); ++d) {
      const TermDefinition &def = definitions[d];
      const TaggedSequence &tokens = *sequences[d];
      const std::string head_lower = to_lower(def.term);
      for (const PatternCount &pc : relation_patterns) {
        for (TokenSpan span : match_spans(tokens, pc.pattern)) {
          std::string tail = span_text(tokens, span);
          std::string tail_lower = to_lower(tail);
          if (tail_lower == head_lower) continue;
          if (!seen.emplace(head_lower, std::move(tail_lower)).second) continue;
          CandidateTriple c;
          c.head = def.term;
          c.relation = r;
          c.tail = std::move(tail);
          c.term = def.term;
          c.sense_index = def.sense_index;
          c.source_id = def.source_id;
          c.pattern = pc.pattern;
          c.span = span;
          bucket.push_back(std::move(c));
        }
      }
    }
  }
  return out;
}

std::size_t candidate_count(const CandidateSet &set) {
  std::size_t n = 0;
  for (const auto &bucket : set) n += bucket.size();
  return n;
}

void write_candidates_jsonl(std::ostream &out, const CandidateSet &set) {
  for (const auto &bucket : set) {
    for (const CandidateTriple &c : bucket) {
      nlohmann::ordered_json j;
      j["head"] = c.head;
      j["relation"] = relation_name(c.relation);
      j["tail"] = c.tail;
      j["term"] = c.term;
      j["sense_index"] = c.sense_index;
      j["source_id"] = c.source_id;
      j["pattern"] = c.pattern.canonical_form();
      j["span"] = {c.span.begin, c.span.end};
      out << j.dump() << '\n';
    }
  }
}

CandidateSet read_candidates_jsonl(std::istream &in) {
  CandidateSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      CandidateTriple c;
      c.head = j.at("head").get<std::string>();
      c.relation = relation_from_string(j.at("relation").get<std::string>());
      c.tail = j.at("tail").get<std::string>();
      c.term = j.at("term").get<std::string>();
      c.sense_index = j.at("sense_index").get<int>();
      c.source_id = j.value("source_id", make_source_id(c.term, c.sense_index));
      c.pattern = PosPattern::parse(j.at("pattern").get<std::string>());
      c.span.begin = j.at("span").at(0).get<std::size_t>();
      c.span.end = j.at("span").at(1).get<std::size_t>();
      set[relation_index(c.relation)].push_back(std::move(c));
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(std::string("bad candidate record: ") + e.what(), line_no);
    } catch (const ValidationError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return set;
}

void write_candidates_tsv(std::ostream &out, const CandidateSet &set) {
  for (const auto &bucket : set) {
    for (const CandidateTriple &c : bucket) {
      out << c.head << '\t' << relation_name(c.relation) << '\t' << c.tail << '\n';
    }
  }
}

}  // namespace cskm
