#include "cskm/pattern_miner.h"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

std::string_view slot_name(Slot slot) { return slot == Slot::kHead ? "head" : "tail"; }

std::optional<Slot> parse_slot(std::string_view name) {
  if (name == "head") return Slot::kHead;
  if (name == "tail") return Slot::kTail;
  return std::nullopt;
}

std::string PosPattern::canonical_form() const {
  std::string out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (i > 0) out += ',';
    out += upos_name(tags[i]);
  }
  return out;
}

PosPattern PosPattern::parse(std::string_view canonical) {
  PosPattern p;
  if (trim(canonical).empty()) throw ValidationError("empty POS pattern");
  for (std::string_view label : split(trim(canonical), ',')) {
    auto tag = parse_upos(trim(label));
    if (!tag) throw ValidationError("unknown UPOS tag '" + std::string(label) + "' in pattern");
    p.tags.push_back(*tag);
  }
  return p;
}

void sort_canonically(PatternTable &table) {
  for (auto &list : table.entries) {
    std::vector<std::pair<std::string, PatternCount>> keyed;
    keyed.reserve(list.size());
    for (auto &pc : list) keyed.emplace_back(pc.pattern.canonical_form(), std::move(pc));
    std::sort(keyed.begin(), keyed.end(), [](const auto &a, const auto &b) {
      if (a.second.frequency != b.second.frequency) {
        return a.second.frequency > b.second.frequency;
      }
      return a.first < b.first;
    });
    list.clear();
    for (auto &[form, pc] : keyed) list.push_back(std::move(pc));
  }
}

PatternTable mine_patterns(const std::vector<Triple> &triples, const Tagger &tagger,
                           const MiningOptions &options) {
  std::array<std::map<std::string, PatternCount>, kRelationCount> counts;
  for (const Triple &t : triples) {
    const std::string &phrase = options.side == Slot::kHead ? t.head : t.tail;
    PosPattern pattern;
    for (const TaggedToken &tok : tagger.tag(phrase, phrase)) {
      if (tok.tag != Upos::PUNCT) pattern.tags.push_back(tok.tag);
    }
    if (pattern.tags.empty() || pattern.tags.size() > options.max_length) continue;
    auto &slot = counts[relation_index(t.relation)];
    auto [it, inserted] = slot.try_emplace(pattern.canonical_form());
    if (inserted) it->second.pattern = std::move(pattern);
    ++it->second.frequency;
  }

  PatternTable table;
  table.side = options.side;
  for (std::size_t r = 0; r < kRelationCount; ++r) {
    for (auto &[form, pc] : counts[r]) table.entries[r].push_back(std::move(pc));
  }
  sort_canonically(table);
  return table;
}

PatternTable select_top_k(PatternTable table, std::size_t k) {
  for (auto &list : table.entries) {
    if (list.size() > k) list.resize(k);
  }
  table.k = k;
  return table;
}

void write_pattern_table(std::ostream &out, const PatternTable &table) {
  out << "# side=" << slot_name(table.side);
  if (table.k) out << " k=" << *table.k;
  out << '\n';
  for (Relation r : kAllRelations) {
    for (const PatternCount &pc : table.patterns(r)) {
      out << relation_name(r) << '\t' << pc.pattern.canonical_form() << '\t'
          << pc.frequency << '\n';
    }
  }
}

PatternTable read_pattern_table(std::istream &in) {
  PatternTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto row = trim(line);
    if (row.empty()) continue;
    if (row.front() == '#') {
      std::istringstream header(std::string(row.substr(1)));
      std::string field;
      while (header >> field) {
        if (field.starts_with("side=")) {
          auto side = parse_slot(field.substr(5));
          if (!side) throw ParseError("bad side in header", line_no);
          table.side = *side;
        } else if (field.starts_with("k=")) {
          auto k = parse_int(field.substr(2));
          if (!k || *k < 0) throw ParseError("bad k in header", line_no);
          table.k = static_cast<std::size_t>(*k);
        }
      }
      continue;
    }
    auto cols = split(row, '\t');
    if (cols.size() != 3) throw ParseError("expected relation<TAB>pattern<TAB>frequency", line_no);
    auto relation = parse_relation(cols[0]);
    if (!relation) throw ParseError("unknown relation '" + std::string(cols[0]) + "'", line_no);
    auto freq = parse_int(cols[2]);
    if (!freq || *freq < 0) throw ParseError("bad frequency", line_no);
    PatternCount pc;
    try {
      pc.pattern = PosPattern::parse(cols[1]);
    } catch (const ValidationError &e) {
      throw ParseError(e.what(), line_no);
    }
    pc.frequency = static_cast<std::size_t>(*freq);
    table.patterns(*relation).push_back(std::move(pc));
  }
  sort_canonically(table);
  return table;
}

}  // namespace cskm
