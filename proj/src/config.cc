#include "cskm/config.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cskm/error.h"
#include "cskm/text.h"

#ifndef CSKM_DATA_DIR
#define CSKM_DATA_DIR "data"
#endif

namespace cskm {

namespace fs = std::filesystem;

std::string_view scorer_type_name(ScorerType t) {
  switch (t) {
    case ScorerType::kBilinear: return "bilinear";
    case ScorerType::kPmi: return "pmi";
    case ScorerType::kExternal: return "external";
  }
  return "?";
}

const ScorerConfig *PipelineConfig::find_scorer(std::string_view name) const {
  for (const ScorerConfig &s : scorers) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool PipelineConfig::has_relation(Relation r) const {
  return std::find(relations.begin(), relations.end(), r) != relations.end();
}

std::optional<std::string> process_env(const std::string &name) {
  const char *v = std::getenv(name.c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

fs::path default_data_dir() { return fs::path(CSKM_DATA_DIR); }

std::vector<Relation> parse_relation_list(std::string_view text) {
  if (trim(text) == "all") return {kAllRelations.begin(), kAllRelations.end()};
  std::set<Relation> seen;
  for (std::string_view part : split(text, ',')) {
    auto label = trim(part);
    if (label.empty()) continue;
    seen.insert(relation_from_string(label));
  }
  if (seen.empty()) throw ValidationError("relation list is empty");
  return {seen.begin(), seen.end()};
}

namespace {

const std::map<std::string, std::set<std::string>> &fixed_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"inputs",
       {"kg_dump", "training", "definitions", "definitions_format", "pretagged", "lexicon",
        "suffix_rules", "stopwords", "lemmas", "patterns"}},
      {"ingest", {"language", "metadata_filter", "restrict_to_kg_terms"}},
      {"patterns", {"k", "side", "max_length", "source"}},
      {"selection", {"theta", "top_n"}},
      {"sample", {"n"}},
      {"run", {"seed", "relations"}},
      {"novelty", {"references", "relation_agnostic", "embedding_distance", "embedding_scorer"}},
      {"analysis", {"bins"}},
      {"negatives", {"n"}},
  };
  return schema;
}

const std::set<std::string> kScorerKeys = {"type", "model", "scores", "components", "calibrated"};

bool valid_scorer_name(std::string_view name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

std::string env_name(const std::string &section, const std::string &key) {
  std::string name = "CSKM_" + section + "_" + key;
  for (char &c : name) {
    if (c == '.' || c == '-') c = '_';
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return name;
}

// Effective settings: file values overlaid with environment values.
class Settings {
 public:
  using Section = std::map<std::string, std::string>;

  void set(const std::string &section, const std::string &key, std::string value) {
    sections_[section][key] = std::move(value);
  }

  std::optional<std::string> get(const std::string &section, const std::string &key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

 private:
  std::map<std::string, Section> sections_;
};

std::string where(const std::string &section, const std::string &key) {
  return "[" + section + "] " + key;
}

std::size_t as_size(const std::string &section, const std::string &key, const std::string &v) {
  auto n = parse_int(v);
  if (!n || *n < 0) throw ValidationError(where(section, key) + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(*n);
}

double as_double(const std::string &section, const std::string &key, const std::string &v) {
  auto d = parse_double(v);
  if (!d) throw ValidationError(where(section, key) + ": expected a number, got '" + v + "'");
  return *d;
}

bool as_bool(const std::string &section, const std::string &key, const std::string &v) {
  const std::string s = to_lower(trim(v));
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ValidationError(where(section, key) + ": expected true or false, got '" + v + "'");
}

}  // namespace

PipelineConfig load_config(const fs::path &path, const EnvLookup &env) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error &e) {
    throw ParseError(e.message(), e.line());
  }

  Settings settings;
  std::vector<std::string> scorer_sections;
  for (const auto &[section, body] : tree) {
    const bool is_scorer = section.rfind("scorer.", 0) == 0;
    if (!is_scorer && !fixed_schema().contains(section)) {
      throw ValidationError("unknown config section [" + section + "]");
    }
    if (is_scorer) {
      if (!valid_scorer_name(section.substr(7))) {
        throw ValidationError("scorer names may use letters, digits, '_' and '-': [" + section + "]");
      }
      scorer_sections.push_back(section);
    }
    const auto &keys = is_scorer ? kScorerKeys : fixed_schema().at(section);
    for (const auto &[key, value] : body) {
      if (!keys.contains(key)) throw ValidationError("unknown config key " + where(section, key));
      settings.set(section, key, std::string(trim(value.data())));
    }
  }
  auto overlay = [&](const std::string &section, const std::set<std::string> &keys) {
    for (const std::string &key : keys) {
      if (auto v = env(env_name(section, key))) settings.set(section, key, std::string(trim(*v)));
    }
  };
  for (const auto &[section, keys] : fixed_schema()) overlay(section, keys);
  for (const std::string &section : scorer_sections) overlay(section, kScorerKeys);

  const fs::path base = fs::absolute(path).parent_path();
  auto path_of = [&](const std::string &section, const std::string &key) -> fs::path {
    auto v = settings.get(section, key);
    if (!v || v->empty()) return {};
    fs::path p(*v);
    return (p.is_absolute() ? p : base / p).lexically_normal();
  };

  PipelineConfig c;
  c.kg_dump = path_of("inputs", "kg_dump");
  c.training = path_of("inputs", "training");
  c.definitions = path_of("inputs", "definitions");
  c.pretagged = path_of("inputs", "pretagged");
  c.lemmas = path_of("inputs", "lemmas");
  c.patterns = path_of("inputs", "patterns");
  c.lexicon = path_of("inputs", "lexicon");
  c.suffix_rules = path_of("inputs", "suffix_rules");
  c.stopwords = path_of("inputs", "stopwords");
  const fs::path data = fs::absolute(default_data_dir());
  if (c.lexicon.empty()) c.lexicon = data / "en_lexicon.tsv";
  if (c.suffix_rules.empty()) c.suffix_rules = data / "en_suffix_rules.tsv";
  if (c.stopwords.empty()) c.stopwords = data / "en_stopwords.txt";

  if (auto v = settings.get("inputs", "definitions_format")) {
    if (*v == "auto") c.definitions_format = DefinitionFormat::kAuto;
    else if (*v == "jsonl") c.definitions_format = DefinitionFormat::kJsonLines;
    else if (*v == "tsv") c.definitions_format = DefinitionFormat::kTsv;
    else throw ValidationError(where("inputs", "definitions_format") + ": expected auto, jsonl or tsv");
  }

  if (auto v = settings.get("ingest", "language")) c.language = *v;
  if (auto v = settings.get("ingest", "metadata_filter")) c.metadata_filter = *v;
  if (auto v = settings.get("ingest", "restrict_to_kg_terms")) {
    c.restrict_to_kg_terms = as_bool("ingest", "restrict_to_kg_terms", *v);
  }

  if (auto v = settings.get("patterns", "k")) c.k = as_size("patterns", "k", *v);
  if (auto v = settings.get("patterns", "side")) {
    auto s = parse_slot(*v);
    if (!s) throw ValidationError(where("patterns", "side") + ": expected head or tail");
    c.side = *s;
  }
  if (auto v = settings.get("patterns", "max_length")) {
    c.max_pattern_length = as_size("patterns", "max_length", *v);
  }
  if (auto v = settings.get("patterns", "source")) {
    if (*v == "kg") c.mine_from_training = false;
    else if (*v == "training") c.mine_from_training = true;
    else throw ValidationError(where("patterns", "source") + ": expected kg or training");
  }

  if (auto v = settings.get("selection", "theta")) c.theta = as_double("selection", "theta", *v);
  if (auto v = settings.get("selection", "top_n")) c.top_n = as_size("selection", "top_n", *v);
  if (auto v = settings.get("sample", "n")) c.sample_n = as_size("sample", "n", *v);
  if (auto v = settings.get("run", "seed")) {
    auto n = parse_int(*v);
    if (!n || *n < 0) throw ValidationError(where("run", "seed") + ": expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(*n);
  }
  if (auto v = settings.get("run", "relations")) c.relations = parse_relation_list(*v);
  if (auto v = settings.get("novelty", "references")) {
    for (std::string_view item : split(*v, ',')) {
      const fs::path p(std::string(trim(item)));
      if (!p.empty()) c.novelty_references.push_back((p.is_absolute() ? p : base / p).lexically_normal());
    }
  }
  if (auto v = settings.get("novelty", "relation_agnostic")) {
    c.relation_agnostic = as_bool("novelty", "relation_agnostic", *v);
  }
  if (auto v = settings.get("novelty", "embedding_distance")) {
    c.embedding_distance = as_bool("novelty", "embedding_distance", *v);
  }
  if (auto v = settings.get("novelty", "embedding_scorer")) c.embedding_scorer = *v;
  if (auto v = settings.get("analysis", "bins")) c.histogram_bins = as_size("analysis", "bins", *v);
  if (auto v = settings.get("negatives", "n")) c.negatives_n = as_size("negatives", "n", *v);

  for (const std::string &section : scorer_sections) {
    ScorerConfig s;
    s.name = section.substr(7);
    const std::string type = settings.get(section, "type").value_or("");
    std::string file_key;
    if (type == "bilinear") {
      s.type = ScorerType::kBilinear;
      file_key = "model";
      s.calibrated = true;
    } else if (type == "pmi") {
      s.type = ScorerType::kPmi;
      file_key = "components";
      s.calibrated = false;
    } else if (type == "external") {
      s.type = ScorerType::kExternal;
      file_key = "scores";
      s.calibrated = true;
    } else {
      throw ValidationError(where(section, "type") + ": expected bilinear, pmi or external");
    }
    for (const char *k : {"model", "scores", "components"}) {
      if (k != file_key && settings.get(section, k)) {
        throw ValidationError(where(section, k) + " does not apply to a " + type + " scorer");
      }
    }
    s.path = path_of(section, file_key);
    if (s.path.empty()) throw ValidationError(where(section, file_key) + " is required");
    if (auto v = settings.get(section, "calibrated")) {
      if (s.type != ScorerType::kExternal) {
        throw ValidationError(where(section, "calibrated") + " applies to external scorers only");
      }
      s.calibrated = as_bool(section, "calibrated", *v);
    }
    c.scorers.push_back(std::move(s));
  }
  return c;
}

void PipelineConfig::validate() const {
  auto require = [](const fs::path &p, const char *what, bool optional) {
    if (p.empty()) {
      if (optional) return;
      throw ValidationError(std::string(what) + " is required");
    }
    if (!fs::is_regular_file(p)) {
      throw ValidationError(std::string(what) + " does not exist: " + p.string());
    }
  };
  require(kg_dump, "[inputs] kg_dump", false);
  require(definitions, "[inputs] definitions", false);
  require(training, "[inputs] training", true);
  require(pretagged, "[inputs] pretagged", true);
  require(lexicon, "[inputs] lexicon", false);
  require(suffix_rules, "[inputs] suffix_rules", false);
  require(stopwords, "[inputs] stopwords", false);
  require(lemmas, "[inputs] lemmas", true);
  require(patterns, "[inputs] patterns", true);
  for (const fs::path &p : novelty_references) require(p, "[novelty] references", false);

  if (language.size() != 2 || !std::all_of(language.begin(), language.end(),
                                           [](char ch) { return ch >= 'a' && ch <= 'z'; })) {
    throw ValidationError("[ingest] language must be a two-letter lowercase code");
  }
  if (k == 0) throw ValidationError("[patterns] k must be at least 1");
  if (max_pattern_length == 0) throw ValidationError("[patterns] max_length must be at least 1");
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw ValidationError("[selection] theta must be in [0, 1], got " + format_double(theta));
  }
  if (top_n == 0) throw ValidationError("[selection] top_n must be at least 1");
  if (sample_n == 0) throw ValidationError("[sample] n must be at least 1");
  if (histogram_bins == 0) throw ValidationError("[analysis] bins must be at least 1");
  if (relations.empty()) throw ValidationError("[run] relations is empty");

  std::set<std::string> names;
  for (const ScorerConfig &s : scorers) {
    if (!names.insert(s.name).second) throw ValidationError("duplicate scorer " + s.name);
    require(s.path, ("[scorer." + s.name + "] input").c_str(), false);
  }
  if (embedding_distance) {
    const ScorerConfig *s = find_scorer(embedding_scorer);
    if (s == nullptr || s->type != ScorerType::kBilinear) {
      throw ValidationError("[novelty] embedding_scorer must name a bilinear scorer");
    }
  }
}

std::string PipelineConfig::canonical_text() const {
  std::ostringstream out;
  auto line = [&](const std::string &key, const std::string &value) {
    out << key << '=' << value << '\n';
  };
  line("inputs.kg_dump", kg_dump.string());
  line("inputs.training", training.string());
  line("inputs.definitions", definitions.string());
  line("inputs.definitions_format",
       definitions_format == DefinitionFormat::kAuto ? "auto"
       : definitions_format == DefinitionFormat::kJsonLines ? "jsonl" : "tsv");
  line("inputs.pretagged", pretagged.string());
  line("inputs.lexicon", lexicon.string());
  line("inputs.suffix_rules", suffix_rules.string());
  line("inputs.stopwords", stopwords.string());
  line("inputs.lemmas", lemmas.string());
  line("inputs.patterns", patterns.string());
  line("ingest.language", language);
  line("ingest.metadata_filter", metadata_filter);
  line("ingest.restrict_to_kg_terms", restrict_to_kg_terms ? "true" : "false");
  line("patterns.k", std::to_string(k));
  line("patterns.side", std::string(slot_name(side)));
  line("patterns.max_length", std::to_string(max_pattern_length));
  line("patterns.source", mine_from_training ? "training" : "kg");
  line("selection.theta", format_double(theta));
  line("selection.top_n", std::to_string(top_n));
  line("sample.n", std::to_string(sample_n));
  line("run.seed", std::to_string(seed));
  std::vector<std::string> names;
  for (Relation r : relations) names.emplace_back(relation_name(r));
  line("run.relations", join(names, ","));
  std::vector<std::string> refs;
  for (const fs::path &p : novelty_references) refs.push_back(p.string());
  line("novelty.references", join(refs, ","));
  line("novelty.relation_agnostic", relation_agnostic ? "true" : "false");
  line("novelty.embedding_distance", embedding_distance ? "true" : "false");
  line("novelty.embedding_scorer", embedding_scorer);
  line("analysis.bins", std::to_string(histogram_bins));
  line("negatives.n", std::to_string(negatives_n));
  for (const ScorerConfig &s : scorers) {
    const std::string prefix = "scorer." + s.name + ".";
    line(prefix + "type", std::string(scorer_type_name(s.type)));
    line(prefix + "path", s.path.string());
    line(prefix + "calibrated", s.calibrated ? "true" : "false");
  }
  return out.str();
}

}  // namespace cskm
