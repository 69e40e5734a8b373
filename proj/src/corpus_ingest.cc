#include "cskm/corpus_ingest.h"

#include <array>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "cskm/text.h"

namespace cskm {

namespace {

bool next_line(std::istream &in, std::string &line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void require_readable(std::istream &in, std::string_view what) {
  if (!in.good() && !in.eof()) {
    throw InputError("cannot read " + std::string(what));
  }
}

void check_stream_after(std::istream &in, std::string_view what) {
  if (in.bad()) throw InputError("read failure in " + std::string(what));
}

void skip(ParseStats &stats, std::size_t ParseStats::*reason) {
  ++stats.skipped;
  ++(stats.*reason);
}

void warn_if_empty(ParseStats &stats, std::string_view what) {
  if (stats.parsed == 0) {
    stats.warnings.push_back("no " + std::string(what) + " parsed from " +
                             std::to_string(stats.rows) + " rows");
  }
}

bool valid_language_code(std::string_view code) {
  return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' &&
         code[1] >= 'a' && code[1] <= 'z';
}

std::string source_tag(std::string_view name, std::size_t line) {
  return std::string(name) + ":" + std::to_string(line);
}

}  // namespace

std::optional<ConceptUri> decode_concept_uri(std::string_view uri) {
  constexpr std::string_view kPrefix = "/c/";
  if (uri.substr(0, kPrefix.size()) != kPrefix) return std::nullopt;
  auto parts = split(uri.substr(kPrefix.size()), '/');
  if (parts.size() < 2 || parts[0].empty() || parts[1].empty()) return std::nullopt;
  ConceptUri c;
  c.language = std::string(parts[0]);
  c.text = std::string(parts[1]);
  for (char &ch : c.text) {
    if (ch == '_') ch = ' ';
  }
  if (trim(c.text).empty()) return std::nullopt;
  c.text = std::string(trim(c.text));
  return c;
}

Parsed<Triple> parse_kg_dump(std::istream &in, const KgDumpOptions &options) {
  if (!valid_language_code(options.language)) {
    throw ValidationError("language filter must be a two-letter code, got '" +
                          options.language + "'");
  }
  require_readable(in, options.source_name);

  Parsed<Triple> result;
  ParseStats &stats = result.stats;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++stats.rows;

    auto cols = split(line, '\t');
    if (cols.size() < 4) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    constexpr std::string_view kRelPrefix = "/r/";
    std::string_view rel_uri = cols[1];
    if (rel_uri.substr(0, kRelPrefix.size()) != kRelPrefix) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    auto start = decode_concept_uri(cols[2]);
    auto end = decode_concept_uri(cols[3]);
    if (!start || !end) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    auto relation = parse_relation(rel_uri.substr(kRelPrefix.size()));
    if (!relation) {
      skip(stats, &ParseStats::unknown_relation);
      continue;
    }
    if (start->language != options.language || end->language != options.language) {
      skip(stats, &ParseStats::filtered);
      continue;
    }
    if (!options.metadata_filter.empty() &&
        (cols.size() < 5 || cols[4].find(options.metadata_filter) == std::string_view::npos)) {
      skip(stats, &ParseStats::filtered);
      continue;
    }

    Triple t;
    t.head = std::move(start->text);
    t.relation = *relation;
    t.tail = std::move(end->text);
    t.source = source_tag(options.source_name, line_no);
    result.items.push_back(std::move(t));
    ++stats.parsed;
  }
  check_stream_after(in, options.source_name);
  warn_if_empty(stats, "triples");
  return result;
}

Parsed<Triple> load_training_triples(std::istream &in, std::string_view source_name) {
  require_readable(in, source_name);
  Parsed<Triple> result;
  ParseStats &stats = result.stats;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++stats.rows;

    auto cols = split(line, '\t');
    if (cols.size() != 4) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    auto relation = parse_relation(trim(cols[0]));
    if (!relation) {
      skip(stats, &ParseStats::unknown_relation);
      continue;
    }
    auto head = trim(cols[1]);
    auto tail = trim(cols[2]);
    auto confidence = parse_double(cols[3]);
    if (head.empty() || tail.empty() || !confidence) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    Triple t;
    t.head = std::string(head);
    t.relation = *relation;
    t.tail = std::string(tail);
    t.source = source_tag(source_name, line_no);
    t.confidence = *confidence;
    result.items.push_back(std::move(t));
    ++stats.parsed;
  }
  check_stream_after(in, source_name);
  return result;
}

bool is_morphological(std::string_view definition_text) {
  static constexpr std::array<std::string_view, 4> kPhrases = {
      "plural of", "alternative form of", "alternative spelling of",
      "misspelling of"};
  const std::string lower = to_lower(definition_text);
  for (std::string_view p : kPhrases) {
    if (lower.find(p) != std::string::npos) return true;
  }
  return false;
}

std::string make_source_id(std::string_view term, int sense_index) {
  return std::string(term) + "#" + std::to_string(sense_index);
}

Parsed<TermDefinition> load_definitions(std::istream &in,
                                        const DefinitionLoadOptions &options) {
  require_readable(in, "definitions");
  Parsed<TermDefinition> result;
  ParseStats &stats = result.stats;
  DefinitionFormat format = options.format;
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, int> next_sense;

  std::string line;
  while (next_line(in, line)) {
    std::string_view row = trim(line);
    if (row.empty()) continue;
    ++stats.rows;
    if (format == DefinitionFormat::kAuto) {
      format = row.front() == '{' ? DefinitionFormat::kJsonLines : DefinitionFormat::kTsv;
    }

    std::string term, pos, gloss;
    if (format == DefinitionFormat::kJsonLines) {
      auto j = nlohmann::json::parse(row, nullptr, /*allow_exceptions=*/false);
      if (!j.is_object()) {
        skip(stats, &ParseStats::malformed);
        continue;
      }
      auto get = [&j](const char *key) -> std::string {
        auto it = j.find(key);
        return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
      };
      term = get("term");
      pos = get("pos");
      gloss = get("gloss");
    } else {
      auto cols = split(row, '\t');
      if (cols.size() != 3) {
        skip(stats, &ParseStats::malformed);
        continue;
      }
      term = std::string(cols[0]);
      pos = std::string(cols[1]);
      gloss = std::string(cols[2]);
    }
    term = std::string(trim(term));
    gloss = std::string(trim(gloss));
    if (term.empty() || gloss.empty()) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    if (options.whitelist && !options.whitelist->contains(to_lower(term))) {
      skip(stats, &ParseStats::not_whitelisted);
      continue;
    }
    if (is_morphological(gloss)) {
      skip(stats, &ParseStats::morphological);
      continue;
    }
    if (!seen.emplace(term, gloss).second) {
      skip(stats, &ParseStats::duplicate);
      continue;
    }

    TermDefinition d;
    d.term = term;
    d.pos = std::string(trim(pos));
    d.sense_index = next_sense[term]++;
    d.definition_text = std::move(gloss);
    d.source_id = make_source_id(d.term, d.sense_index);
    result.items.push_back(std::move(d));
    ++stats.parsed;
  }
  check_stream_after(in, "definitions");
  warn_if_empty(stats, "definitions");
  return result;
}

std::unordered_set<std::string> concept_vocabulary(const std::vector<Triple> &triples) {
  std::unordered_set<std::string> vocab;
  for (const Triple &t : triples) {
    vocab.insert(t.head_lower());
    vocab.insert(t.tail_lower());
  }
  return vocab;
}

void write_triples_tsv(std::ostream &out, const std::vector<Triple> &triples) {
  for (const Triple &t : triples) {
    out << relation_name(t.relation) << '\t' << t.head << '\t' << t.tail << '\t'
        << t.source;
    if (t.confidence) out << '\t' << format_double(*t.confidence);
    out << '\n';
  }
}

Parsed<Triple> read_triples_tsv(std::istream &in) {
  require_readable(in, "triple TSV");
  Parsed<Triple> result;
  ParseStats &stats = result.stats;
  std::string line;
  while (next_line(in, line)) {
    if (trim(line).empty()) continue;
    ++stats.rows;
    auto cols = split(line, '\t');
    if (cols.size() != 4 && cols.size() != 5) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    auto relation = parse_relation(cols[0]);
    if (!relation) {
      skip(stats, &ParseStats::unknown_relation);
      continue;
    }
    Triple t;
    t.relation = *relation;
    t.head = std::string(cols[1]);
    t.tail = std::string(cols[2]);
    t.source = std::string(cols[3]);
    if (cols.size() == 5) {
      auto c = parse_double(cols[4]);
      if (!c) {
        skip(stats, &ParseStats::malformed);
        continue;
      }
      t.confidence = *c;
    }
    if (trim(t.head).empty() || trim(t.tail).empty()) {
      skip(stats, &ParseStats::malformed);
      continue;
    }
    result.items.push_back(std::move(t));
    ++stats.parsed;
  }
  check_stream_after(in, "triple TSV");
  return result;
}

void write_definitions_tsv(std::ostream &out,
                           const std::vector<TermDefinition> &definitions) {
  for (const TermDefinition &d : definitions) {
    out << d.term << '\t' << d.sense_index << '\t' << d.definition_text << '\n';
  }
}

std::vector<TermDefinition> read_definitions_tsv(std::istream &in) {
  require_readable(in, "definitions TSV");
  std::vector<TermDefinition> defs;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    auto sense = cols.size() == 3 ? parse_int(cols[1]) : std::nullopt;
    if (!sense || *sense < 0 || cols[0].empty() || cols[2].empty()) {
      throw ParseError("expected term<TAB>sense_index<TAB>gloss", line_no);
    }
    TermDefinition d;
    d.term = std::string(cols[0]);
    d.sense_index = static_cast<int>(*sense);
    d.definition_text = std::string(cols[2]);
    d.source_id = make_source_id(d.term, d.sense_index);
    defs.push_back(std::move(d));
  }
  check_stream_after(in, "definitions TSV");
  return defs;
}

}  // namespace cskm
