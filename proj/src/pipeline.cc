#include "cskm/pipeline.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cskm/analysis.h"
#include "cskm/annotation.h"
#include "cskm/bilinear_model.h"
#include "cskm/candidate_extractor.h"
#include "cskm/corpus_ingest.h"
#include "cskm/digest.h"
#include "cskm/novelty.h"
#include "cskm/pattern_miner.h"
#include "cskm/pos_tagging.h"
#include "cskm/scoring.h"
#include "cskm/text.h"

namespace cskm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kTag: return "tag";
    case Stage::kMinePatterns: return "mine-patterns";
    case Stage::kExtract: return "extract";
    case Stage::kScore: return "score";
    case Stage::kNovelty: return "novelty";
    case Stage::kSelect: return "select";
    case Stage::kSample: return "sample";
    case Stage::kAnalyze: return "analyze";
    case Stage::kReport: return "report";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view stage_directory(Stage s) {
  return s == Stage::kMinePatterns ? "patterns" : stage_name(s);
}

namespace {

std::ifstream open_in(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path &p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

std::string read_text(const fs::path &p) {
  std::ifstream in = open_in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path &p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error &e) {
    throw InputError(p.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path &p, const json &j) { open_out(p) << j.dump(2) << '\n'; }

json stats_json(const ParseStats &s) {
  return {{"rows", s.rows},
          {"parsed", s.parsed},
          {"skipped", s.skipped},
          {"malformed", s.malformed},
          {"unknown_relation", s.unknown_relation},
          {"filtered", s.filtered},
          {"morphological", s.morphological},
          {"duplicate", s.duplicate},
          {"not_whitelisted", s.not_whitelisted},
          {"warnings", s.warnings}};
}

// Everything a stage reads from disk and everything it writes there. Inputs
// under the run directory are named by their relative path so fingerprints do
// not depend on where the run directory lives.
struct StagePlan {
  std::vector<std::string> upstream;           // required, relative to the run dir
  std::vector<std::string> optional_upstream;  // relative; may be absent
  std::vector<fs::path> external;              // absolute input files
  std::string params;
  std::function<void(const fs::path &out)> body;
};

class Runner {
 public:
  Runner(const PipelineConfig &config, fs::path run_dir)
      : cfg_(config), run_(std::move(run_dir)) {}

  StageOutcome run(Stage stage, bool force);
  StagePlan plan(Stage stage) const;

 private:
  std::string fingerprint(Stage stage, const StagePlan &plan) const;
  bool up_to_date(const fs::path &dir, const std::string &fingerprint) const;

  fs::path at(const std::string &rel) const { return run_ / rel; }

  void ingest(const fs::path &out) const;
  void tag(const fs::path &out) const;
  void mine(const fs::path &out) const;
  void extract(const fs::path &out) const;
  void score(const fs::path &out) const;
  void novelty(const fs::path &out) const;
  void select(const fs::path &out) const;
  void sample(const fs::path &out) const;
  void analyze(const fs::path &out) const;

  Tagger make_tagger() const;
  std::vector<Triple> read_triples(const std::string &rel) const;
  std::vector<TermDefinition> read_definitions() const;
  std::vector<CandidateTriple> read_candidates() const;
  std::vector<ScoreRecord> read_scores(const fs::path &p, const std::string &scorer) const;

  const PipelineConfig &cfg_;
  fs::path run_;
};

std::string Runner::fingerprint(Stage stage, const StagePlan &plan) const {
  std::string text = "stage=" + std::string(stage_name(stage)) + '\n' + plan.params;
  for (const std::string &rel : plan.upstream) {
    const fs::path p = at(rel);
    if (!fs::is_regular_file(p)) {
      throw StageError(stage, "missing input " + rel + "; run the stage that produces it first");
    }
    text += "run:" + rel + '=' + sha256_file(p) + '\n';
  }
  for (const std::string &rel : plan.optional_upstream) {
    const fs::path p = at(rel);
    text += "run:" + rel + '=' + (fs::is_regular_file(p) ? sha256_file(p) : "absent") + '\n';
  }
  for (const fs::path &p : plan.external) {
    text += "file:" + p.string() + '=' + sha256_file(p) + '\n';
  }
  return sha256_hex(text);
}

std::map<std::string, std::string> output_digests(const fs::path &dir) {
  std::map<std::string, std::string> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "stage.json") continue;
    out[rel] = sha256_file(entry.path());
  }
  return out;
}

bool Runner::up_to_date(const fs::path &dir, const std::string &fp) const {
  const fs::path stamp = dir / "stage.json";
  if (!fs::is_regular_file(stamp)) return false;
  json j;
  try {
    j = read_json(stamp);
  } catch (const InputError &) {
    return false;
  }
  if (j.value("fingerprint", "") != fp) return false;
  std::map<std::string, std::string> recorded;
  try {
    recorded = j.at("outputs").get<std::map<std::string, std::string>>();
  } catch (const json::exception &) {
    return false;
  }
  return recorded == output_digests(dir);
}

StageOutcome Runner::run(Stage stage, bool force) {
  StagePlan p = plan(stage);
  StageOutcome outcome{stage, false, fingerprint(stage, p)};
  const fs::path dir = run_ / stage_directory(stage);
  if (!force && up_to_date(dir, outcome.fingerprint)) return outcome;

  fs::remove_all(dir);
  fs::create_directories(dir);
  try {
    p.body(dir);
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(stage, e.what());
  }
  json stamp = {{"stage", stage_name(stage)},
                {"fingerprint", outcome.fingerprint},
                {"outputs", output_digests(dir)}};
  write_json(dir / "stage.json", stamp);
  outcome.ran = true;
  return outcome;
}

std::string relation_list(const std::vector<Relation> &rs) {
  std::vector<std::string> names;
  for (Relation r : rs) names.emplace_back(relation_name(r));
  return join(names, ",");
}

StagePlan Runner::plan(Stage stage) const {
  StagePlan p;
  auto add_optional_file = [&](const fs::path &f) {
    if (!f.empty()) p.external.push_back(f);
  };
  switch (stage) {
    case Stage::kIngest:
      p.external = {cfg_.kg_dump, cfg_.definitions};
      add_optional_file(cfg_.training);
      p.params = "language=" + cfg_.language + "\nmetadata_filter=" + cfg_.metadata_filter +
                 "\nrestrict=" + (cfg_.restrict_to_kg_terms ? "1" : "0") +
                 "\nformat=" + std::to_string(static_cast<int>(cfg_.definitions_format)) +
                 "\ntraining=" + (cfg_.training.empty() ? "none" : "set") + '\n';
      p.body = [this](const fs::path &out) { ingest(out); };
      break;
    case Stage::kTag:
      p.upstream = {"ingest/definitions.tsv"};
      p.external = {cfg_.lexicon, cfg_.suffix_rules};
      add_optional_file(cfg_.pretagged);
      p.params = std::string("pretagged=") + (cfg_.pretagged.empty() ? "none" : "set") + '\n';
      p.body = [this](const fs::path &out) { tag(out); };
      break;
    case Stage::kMinePatterns:
      if (cfg_.patterns.empty()) {
        p.upstream = {cfg_.mine_from_training ? "ingest/training.tsv" : "ingest/kg.tsv"};
        p.external = {cfg_.lexicon, cfg_.suffix_rules};
        add_optional_file(cfg_.pretagged);
      } else {
        p.external = {cfg_.patterns};
      }
      p.params = "k=" + std::to_string(cfg_.k) + "\nside=" + std::string(slot_name(cfg_.side)) +
                 "\nmax_length=" + std::to_string(cfg_.max_pattern_length) +
                 "\nsource=" + (cfg_.patterns.empty() ? "mined" : "fixed") +
                 "\nrelations=" + relation_list(cfg_.relations) + '\n';
      p.body = [this](const fs::path &out) { mine(out); };
      break;
    case Stage::kExtract:
      p.upstream = {"ingest/definitions.tsv", "tag/definitions.conll", "patterns/patterns.tsv"};
      p.body = [this](const fs::path &out) { extract(out); };
      break;
    case Stage::kScore:
      p.upstream = {"extract/candidates.jsonl"};
      for (const ScorerConfig &s : cfg_.scorers) {
        p.external.push_back(s.path);
        p.params += "scorer=" + s.name + ':' + std::string(scorer_type_name(s.type)) + ':' +
                    (s.calibrated ? "calibrated" : "uncalibrated") + '\n';
      }
      p.body = [this](const fs::path &out) { score(out); };
      break;
    case Stage::kNovelty:
      p.upstream = {"extract/candidates.jsonl", "ingest/kg.tsv", "ingest/training.tsv"};
      p.external = {cfg_.stopwords};
      add_optional_file(cfg_.lemmas);
      for (const fs::path &f : cfg_.novelty_references) p.external.push_back(f);
      p.params = "relations=" + relation_list(cfg_.relations) +
                 "\nreferences=" + std::to_string(cfg_.novelty_references.size()) +
                 "\nrelation_agnostic=" + (cfg_.relation_agnostic ? "1" : "0") + '\n';
      if (cfg_.embedding_distance) {
        p.external.push_back(cfg_.find_scorer(cfg_.embedding_scorer)->path);
        p.params += "embedding_distance=" + cfg_.embedding_scorer + '\n';
      }
      p.body = [this](const fs::path &out) { novelty(out); };
      break;
    case Stage::kSelect:
      for (const ScorerConfig &s : cfg_.scorers) {
        p.upstream.push_back("score/" + s.name + ".tsv");
        p.params += "scorer=" + s.name + ':' + (s.calibrated ? "calibrated" : "uncalibrated") + '\n';
      }
      p.params += "theta=" + format_double(cfg_.theta) + "\ntop_n=" + std::to_string(cfg_.top_n) +
                  "\nrelations=" + relation_list(cfg_.relations) + '\n';
      p.body = [this](const fs::path &out) { select(out); };
      break;
    case Stage::kSample:
      p.upstream = {"select/counts.csv", "extract/candidates.jsonl", "ingest/definitions.tsv",
                    "tag/definitions.conll", "novelty/novelty.jsonl"};
      for (const ScorerConfig &s : cfg_.scorers) {
        for (Relation r : cfg_.relations) {
          p.upstream.push_back("select/" + s.name + '/' + std::string(relation_name(r)) + ".tsv");
        }
      }
      p.params = "n=" + std::to_string(cfg_.sample_n) + "\nseed=" + std::to_string(cfg_.seed) + '\n';
      p.body = [this](const fs::path &out) { sample(out); };
      break;
    case Stage::kAnalyze:
      p.upstream = {"extract/counts.tsv", "select/counts.csv", "novelty/rates.csv"};
      for (const ScorerConfig &s : cfg_.scorers) {
        p.upstream.push_back("score/" + s.name + ".tsv");
        p.params += "scorer=" + s.name + ':' + std::string(scorer_type_name(s.type)) + ':' +
                    (s.calibrated ? "calibrated" : "uncalibrated") + '\n';
      }
      p.optional_upstream = {"annotations/sessions.jsonl", "annotations/labels.jsonl"};
      p.params += "bins=" + std::to_string(cfg_.histogram_bins) + '\n';
      p.body = [this](const fs::path &out) { analyze(out); };
      break;
    case Stage::kReport:
      // Everything emit_report reads, so a changed table reruns the report.
      p.upstream = {"analyze/analysis.json",     "analyze/candidate_counts.csv", "analyze/tau.csv",
                    "analyze/novelty_rates.csv", "analyze/selection.csv",        "analyze/summary.csv",
                    "analyze/estimates.csv"};
      for (const ScorerConfig &s : cfg_.scorers) p.upstream.push_back("analyze/histogram_" + s.name + ".csv");
      p.body = [this](const fs::path &) { emit_report(run_); };
      break;
  }
  return p;
}

// --- stage bodies -----------------------------------------------------------

void Runner::ingest(const fs::path &out) const {
  KgDumpOptions ko;
  ko.language = cfg_.language;
  ko.metadata_filter = cfg_.metadata_filter;
  ko.source_name = cfg_.kg_dump.filename().string();
  std::ifstream kg_in = open_in(cfg_.kg_dump);
  Parsed<Triple> kg = parse_kg_dump(kg_in, ko);

  Parsed<Triple> training;
  if (!cfg_.training.empty()) {
    std::ifstream tr_in = open_in(cfg_.training);
    training = load_training_triples(tr_in, cfg_.training.filename().string());
  }

  DefinitionLoadOptions dopt;
  dopt.format = cfg_.definitions_format;
  if (cfg_.restrict_to_kg_terms) dopt.whitelist = concept_vocabulary(kg.items);
  std::ifstream def_in = open_in(cfg_.definitions);
  Parsed<TermDefinition> defs = load_definitions(def_in, dopt);

  {
    std::ofstream o = open_out(out / "kg.tsv");
    write_triples_tsv(o, kg.items);
  }
  {
    std::ofstream o = open_out(out / "training.tsv");
    write_triples_tsv(o, training.items);
  }
  {
    std::ofstream o = open_out(out / "definitions.tsv");
    write_definitions_tsv(o, defs.items);
  }
  write_json(out / "stats.json", {{"kg", stats_json(kg.stats)},
                                  {"training", stats_json(training.stats)},
                                  {"definitions", stats_json(defs.stats)}});
}

Tagger Runner::make_tagger() const {
  TagLexicon lexicon = TagLexicon::load_files(cfg_.lexicon.string(), cfg_.suffix_rules.string());
  std::map<std::string, TaggedSequence> pretagged;
  if (!cfg_.pretagged.empty()) {
    std::ifstream in = open_in(cfg_.pretagged);
    pretagged = load_pretagged(in);
  }
  return Tagger(std::move(lexicon), std::move(pretagged));
}

std::vector<Triple> Runner::read_triples(const std::string &rel) const {
  std::ifstream in = open_in(at(rel));
  return read_triples_tsv(in).items;
}

std::vector<TermDefinition> Runner::read_definitions() const {
  std::ifstream in = open_in(at("ingest/definitions.tsv"));
  return read_definitions_tsv(in);
}

std::vector<CandidateTriple> Runner::read_candidates() const {
  std::ifstream in = open_in(at("extract/candidates.jsonl"));
  CandidateSet set = read_candidates_jsonl(in);
  std::vector<CandidateTriple> all;
  for (auto &per_relation : set) {
    for (auto &c : per_relation) all.push_back(std::move(c));
  }
  return all;
}

std::vector<ScoreRecord> Runner::read_scores(const fs::path &p, const std::string &scorer) const {
  std::ifstream in = open_in(p);
  ScoreIngest ingest = ingest_external_scores(in, scorer, false);
  if (ingest.stats.skipped > 0) {
    throw InputError(p.string() + " has " + std::to_string(ingest.stats.skipped) + " unreadable rows");
  }
  return std::move(ingest.records);
}

void Runner::tag(const fs::path &out) const {
  const Tagger tagger = make_tagger();
  std::map<std::string, TaggedSequence> sequences;
  for (const TermDefinition &d : read_definitions()) {
    sequences[d.source_id] = tagger.tag(d.source_id, d.definition_text);
  }
  std::ofstream o = open_out(out / "definitions.conll");
  write_pretagged(o, sequences);
}

void Runner::mine(const fs::path &out) const {
  PatternTable table;
  if (!cfg_.patterns.empty()) {
    std::ifstream in = open_in(cfg_.patterns);
    table = read_pattern_table(in);
  } else {
    const Tagger tagger = make_tagger();
    PatternTable mined = mine_patterns(
        read_triples(cfg_.mine_from_training ? "ingest/training.tsv" : "ingest/kg.tsv"), tagger,
        MiningOptions{cfg_.side, cfg_.max_pattern_length});
    {
      std::ofstream o = open_out(out / "mined.tsv");
      write_pattern_table(o, mined);
    }
    table = select_top_k(std::move(mined), cfg_.k);
  }
  for (Relation r : kAllRelations) {
    if (!cfg_.has_relation(r)) table.patterns(r).clear();
  }
  std::ofstream o = open_out(out / "patterns.tsv");
  write_pattern_table(o, table);
}

void Runner::extract(const fs::path &out) const {
  std::ifstream tagged_in = open_in(at("tag/definitions.conll"));
  const auto tagged = load_pretagged(tagged_in);
  std::ifstream pat_in = open_in(at("patterns/patterns.tsv"));
  const PatternTable patterns = read_pattern_table(pat_in);
  const CandidateSet set = extract_candidates(read_definitions(), tagged, patterns);
  {
    std::ofstream o = open_out(out / "candidates.jsonl");
    write_candidates_jsonl(o, set);
  }
  {
    std::ofstream o = open_out(out / "candidates.tsv");
    write_candidates_tsv(o, set);
  }
  std::ofstream o = open_out(out / "counts.tsv");
  for (Relation r : kAllRelations) {
    o << relation_name(r) << '\t' << set[relation_index(r)].size() << '\n';
  }
  o << "total\t" << candidate_count(set) << '\n';
}

void Runner::score(const fs::path &out) const {
  const std::vector<CandidateTriple> candidates = read_candidates();
  std::ofstream roster = open_out(out / "roster.tsv");
  for (const ScorerConfig &s : cfg_.scorers) {
    roster << s.name << '\t' << scorer_type_name(s.type) << '\t'
           << (s.calibrated ? "calibrated" : "uncalibrated") << '\n';
    std::vector<ScoreRecord> records;
    json stats = {{"scorer", s.name}, {"type", scorer_type_name(s.type)}, {"candidates", candidates.size()}};
    if (s.type == ScorerType::kBilinear) {
      const BilinearModel model = BilinearModel::load_file(s.path.string());
      std::set<std::string> missing;
      std::size_t all_oov = 0;
      for (const CandidateTriple &c : candidates) {
        if (model.relation_matrix(c.relation) == nullptr) {
          missing.emplace(relation_name(c.relation));
          continue;
        }
        records.push_back(bilinear_score(c.head, c.relation, c.tail, model, s.name));
        if (model.embeddings().average(c.head).all_oov() || model.embeddings().average(c.tail).all_oov()) {
          ++all_oov;
        }
      }
      stats["relations_without_matrix"] = missing;
      stats["triples_with_unembedded_concept"] = all_oov;
    } else {
      std::ifstream in = open_in(s.path);
      ScoreIngest ingest = ingest_external_scores(in, s.name, s.calibrated);
      std::unordered_map<TripleKey, double, TripleKeyHash> by_key;
      for (const ScoreRecord &r : ingest.records) by_key.try_emplace(r.key, r.score);
      std::size_t matched = 0;
      for (const CandidateTriple &c : candidates) {
        auto it = by_key.find(c.key());
        if (it == by_key.end()) continue;
        records.push_back({c.key(), s.name, it->second});
        ++matched;
      }
      stats["input"] = stats_json(ingest.stats);
      stats["out_of_range"] = ingest.out_of_range;
      stats["unscored_candidates"] = candidates.size() - matched;
      stats["unmatched_rows"] = by_key.size() - matched;
    }
    stats["scored"] = records.size();
    std::ofstream o = open_out(out / (s.name + ".tsv"));
    write_scores_tsv(o, records);
    write_json(out / (s.name + ".json"), stats);
  }
}

json verdict_json(const NoveltyVerdict &v) {
  return v.matched_reference ? to_json(*v.matched_reference) : json(nullptr);
}

// First three columns of every row: relation, head, tail. Rows with another
// relation or fewer columns are skipped.
std::vector<TripleKey> read_reference_keys(const fs::path &path) {
  std::ifstream in = open_in(path);
  std::vector<TripleKey> keys;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 3) continue;
    const auto r = parse_relation(cols[0]);
    if (!r || trim(cols[1]).empty() || trim(cols[2]).empty()) continue;
    keys.push_back({std::string(cols[1]), *r, std::string(cols[2])});
  }
  return keys;
}

void Runner::novelty(const fs::path &out) const {
  const NormalizationPipeline pipeline =
      NormalizationPipeline::load_files(cfg_.stopwords.string(), cfg_.lemmas.string());
  const std::vector<Triple> kg = read_triples("ingest/kg.tsv");
  const std::vector<Triple> training = read_triples("ingest/training.tsv");

  ReferenceIndex kg_index(pipeline), training_index(pipeline), all_index(pipeline);
  for (const Triple &t : kg) {
    kg_index.add(t.key());
    all_index.add(t.key());
  }
  for (const Triple &t : training) {
    training_index.add(t.key());
    all_index.add(t.key());
  }
  // Listed reference files replace kg + training as the primary reference.
  const bool custom = !cfg_.novelty_references.empty();
  ReferenceIndex custom_index(pipeline);
  for (const fs::path &f : cfg_.novelty_references) {
    for (const TripleKey &k : read_reference_keys(f)) custom_index.add(k);
  }
  const ReferenceIndex &primary = custom ? custom_index : all_index;

  std::optional<BilinearModel> model;
  std::array<std::vector<TripleKey>, kRelationCount> embed_refs;
  if (cfg_.embedding_distance) {
    model.emplace(BilinearModel::load_file(cfg_.find_scorer(cfg_.embedding_scorer)->path.string()));
    for (const Triple &t : training.empty() ? kg : training) {
      embed_refs[relation_index(t.relation)].push_back(t.key());
    }
  }

  const std::vector<CandidateTriple> candidates = read_candidates();
  std::array<std::vector<TripleKey>, kRelationCount> by_relation;
  std::ofstream o = open_out(out / "novelty.jsonl");
  for (const CandidateTriple &c : candidates) {
    const TripleKey key = c.key();
    by_relation[relation_index(c.relation)].push_back(key);
    const NoveltyVerdict matched = primary.lookup(key, cfg_.relation_agnostic);
    const NoveltyVerdict any = primary.lookup(key, true);
    json j = to_json(key);
    j["novel"] = matched.novel;
    j["witness"] = verdict_json(matched);
    j["novel_any_relation"] = any.novel;
    j["witness_any_relation"] = verdict_json(any);
    if (model) {
      const auto &refs = embed_refs[relation_index(c.relation)];
      if (refs.empty()) {
        j["embedding_distance"] = nullptr;
      } else {
        const EmbeddingDistance d = embedding_novelty_distance(key, refs, model->embeddings());
        j["embedding_distance"] = {{"distance", d.distance},
                                   {"nearest", to_json(refs[d.nearest])},
                                   {"zero_vector_used", d.zero_vector_used}};
      }
    }
    o << j.dump() << '\n';
  }

  std::ofstream rates = open_out(out / "rates.csv");
  rates << "relation,reference,mode,novel,total,rate\n";
  std::vector<std::pair<const char *, const ReferenceIndex *>> refs = {
      {"kg", &kg_index}, {"training", &training_index}, {"all", &all_index}};
  if (custom) refs.emplace_back("listed", &custom_index);
  for (Relation r : cfg_.relations) {
    for (const auto &[name, index] : refs) {
      for (bool agnostic : {false, true}) {
        const NoveltyRate nr = novelty_rate(by_relation[relation_index(r)], *index, agnostic);
        rates << relation_name(r) << ',' << name << ',' << (agnostic ? "any-relation" : "same-relation")
              << ',' << nr.novel << ',' << nr.total << ',' << format_double(nr.rate) << '\n';
      }
    }
  }
}

SelectionCriterion criterion_for(const ScorerConfig &s, const PipelineConfig &cfg) {
  return s.calibrated ? SelectionCriterion::threshold(cfg.theta) : SelectionCriterion::top(cfg.top_n);
}

std::string criterion_text(const SelectionCriterion &c) {
  return c.mode == SelectionCriterion::Mode::kThreshold ? "score>=" + format_double(c.theta)
                                                        : "top-" + std::to_string(c.top_n);
}

void Runner::select(const fs::path &out) const {
  std::ofstream counts = open_out(out / "counts.csv");
  counts << "scorer,relation,criterion,scored,qualified\n";
  for (const ScorerConfig &s : cfg_.scorers) {
    const std::vector<ScoreRecord> records = read_scores(at("score/" + s.name + ".tsv"), s.name);
    const SelectionCriterion criterion = criterion_for(s, cfg_);
    for (Relation r : cfg_.relations) {
      const std::vector<ScoreRecord> ranking = rank_candidates(records, r);
      const std::vector<ScoreRecord> qualified = select_qualified(ranking, criterion);
      std::ofstream o = open_out(out / s.name / (std::string(relation_name(r)) + ".tsv"));
      write_scores_tsv(o, qualified);
      counts << s.name << ',' << relation_name(r) << ',' << criterion_text(criterion) << ','
             << ranking.size() << ',' << qualified.size() << '\n';
    }
  }
}

void Runner::sample(const fs::path &out) const {
  std::unordered_map<TripleKey, CandidateTriple, TripleKeyHash> candidates;
  for (CandidateTriple &c : read_candidates()) candidates.try_emplace(c.key(), std::move(c));
  std::unordered_map<std::string, std::string> definitions;
  for (TermDefinition &d : read_definitions()) definitions.emplace(d.source_id, std::move(d.definition_text));
  std::ifstream tagged_in = open_in(at("tag/definitions.conll"));
  const auto tagged = load_pretagged(tagged_in);
  std::unordered_map<TripleKey, NoveltyVerdict, TripleKeyHash> verdicts;
  {
    std::ifstream in = open_in(at("novelty/novelty.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const json j = json::parse(line);
      NoveltyVerdict v;
      v.novel = j.at("novel").get<bool>();
      if (!j.at("witness").is_null()) v.matched_reference = triple_key_from_json(j.at("witness"));
      verdicts.emplace(triple_key_from_json(j), v);
    }
  }

  std::ofstream index = open_out(out / "index.csv");
  index << "scorer,relation,qualified,sampled,file\n";
  for (const ScorerConfig &s : cfg_.scorers) {
    for (Relation r : cfg_.relations) {
      const std::string rel_name(relation_name(r));
      const std::vector<ScoreRecord> qualified =
          read_scores(at("select/" + s.name + '/' + rel_name + ".tsv"), s.name);
      std::unordered_map<TripleKey, std::size_t, TripleKeyHash> rank;
      for (std::size_t i = 0; i < qualified.size(); ++i) rank.emplace(qualified[i].key, i + 1);
      const std::vector<ScoreRecord> drawn =
          sample_for_evaluation(qualified, cfg_.sample_n, derive_seed(cfg_.seed, s.name + '/' + rel_name));

      SampleFile file{r, s.name, qualified.size(), {}};
      for (const ScoreRecord &rec : drawn) {
        SampleItem item;
        item.key = rec.key;
        item.score = rec.score;
        item.rank = rank.at(rec.key);
        item.context_missing = true;
        if (auto c = candidates.find(rec.key); c != candidates.end()) {
          item.term = c->second.term;
          item.sense_index = c->second.sense_index;
          item.source_id = c->second.source_id;
          auto d = definitions.find(c->second.source_id);
          auto t = tagged.find(c->second.source_id);
          if (d != definitions.end()) {
            item.definition = d->second;
            if (t != tagged.end()) item.highlight = span_char_range(d->second, t->second, c->second.span);
            item.context_missing = !item.highlight.has_value();
          }
        }
        if (auto v = verdicts.find(rec.key); v != verdicts.end()) item.automated_novelty = v->second;
        file.items.push_back(std::move(item));
      }
      const std::string rel_path = s.name + '/' + rel_name + ".json";
      write_sample_file(out / rel_path, file);
      index << s.name << ',' << rel_name << ',' << qualified.size() << ',' << drawn.size() << ','
            << "sample/" << rel_path << '\n';
    }
  }
}

std::string csv_number(double v) { return std::isnan(v) ? "n/a" : format_double(v); }

void copy_over(const fs::path &from, const fs::path &to) {
  fs::create_directories(to.parent_path());
  fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

void Runner::analyze(const fs::path &out) const {
  json analysis;

  // Candidate statistics.
  json counts = json::array();
  {
    std::ofstream o = open_out(out / "candidate_counts.csv");
    o << "Relation,# of Candidates\n";
    std::ifstream in = open_in(at("extract/counts.tsv"));
    std::string line;
    while (std::getline(in, line)) {
      auto cols = split(line, '\t');
      if (cols.size() != 2) continue;
      const auto n = parse_int(cols[1]);
      if (!n) throw InputError("extract/counts.tsv: bad count '" + std::string(cols[1]) + "'");
      counts.push_back({{"relation", std::string(cols[0])}, {"count", *n}});
      o << cols[0] << ',' << *n << '\n';
    }
  }
  analysis["candidate_counts"] = counts;

  // Histograms.
  std::vector<std::vector<ScoreRecord>> scores;
  json scorers = json::array();
  for (const ScorerConfig &s : cfg_.scorers) {
    scores.push_back(read_scores(at("score/" + s.name + ".tsv"), s.name));
    std::vector<double> values;
    for (const ScoreRecord &r : scores.back()) values.push_back(r.score);
    std::optional<std::pair<double, double>> range;
    if (s.calibrated || values.empty()) range = std::pair{0.0, 1.0};
    const Histogram h = histogram(values, cfg_.histogram_bins, range);
    const std::string file = "histogram_" + s.name + ".csv";
    {
      std::ofstream o = open_out(out / file);
      write_histogram_csv(o, h);
    }
    scorers.push_back({{"name", s.name},
                       {"type", scorer_type_name(s.type)},
                       {"calibrated", s.calibrated},
                       {"scored", values.size()},
                       {"histogram", {{"file", file},
                                      {"lo", h.lo},
                                      {"hi", h.hi},
                                      {"counts", h.counts},
                                      {"out_of_range", h.out_of_range}}}});
  }
  analysis["scorers"] = scorers;

  // Kendall tau between every pair of scorers over shared triples.
  json tau = json::array();
  {
    std::ofstream o = open_out(out / "tau.csv");
    o << "scorer";
    for (const ScorerConfig &s : cfg_.scorers) o << ',' << s.name;
    o << '\n';
    for (std::size_t i = 0; i < cfg_.scorers.size(); ++i) {
      o << cfg_.scorers[i].name;
      for (std::size_t j = 0; j < cfg_.scorers.size(); ++j) {
        std::optional<TauResult> t;
        try {
          t = kendall_tau(scores[i], scores[j]);
        } catch (const ValidationError &) {
        }
        o << ',' << (t ? csv_number(t->tau) : "n/a");
        if (i < j) {
          tau.push_back({{"a", cfg_.scorers[i].name},
                         {"b", cfg_.scorers[j].name},
                         {"tau", t && !std::isnan(t->tau) ? json(t->tau) : json(nullptr)},
                         {"pairs", t ? t->pairs : 0}});
        }
      }
      o << '\n';
    }
  }
  analysis["tau"] = tau;

  copy_over(at("novelty/rates.csv"), out / "novelty_rates.csv");
  copy_over(at("select/counts.csv"), out / "selection.csv");

  // Manual evaluation, when annotation logs exist.
  const auto [labels, registrations] = load_annotations(run_ / "annotations");
  const EvaluationSummary summary = summarize_annotations(labels, registrations);
  json rows = json::array();
  json estimates = json::array();
  {
    std::ofstream o = open_out(out / "summary.csv");
    write_summary_csv(o, summary);
  }
  std::ofstream est = open_out(out / "estimates.csv");
  est << "Relation,scorer,Qual.,V.,estimate\n";
  for (const SummaryRow &row : summary.rows) {
    rows.push_back({{"relation", relation_name(row.relation)},
                    {"scorer", row.scorer_id},
                    {"qualified", row.qualified_count},
                    {"sample_size", row.sample_size},
                    {"annotators", row.annotators},
                    {"labels", row.labels},
                    {"validity", row.validity},
                    {"valid_and_novel", row.valid_and_novel}});
    if (row.labels == 0) continue;
    const ValidCountEstimate e = estimate_valid_count(row.qualified_count, row.validity);
    estimates.push_back({{"relation", relation_name(row.relation)},
                         {"scorer", row.scorer_id},
                         {"qualified", e.qualified_count},
                         {"validity", e.validity},
                         {"estimate", e.estimate}});
    est << relation_name(row.relation) << ',' << row.scorer_id << ',' << e.qualified_count << ','
        << format_double(e.validity) << ',' << format_double(e.estimate) << '\n';
  }
  analysis["summary"] = rows;
  analysis["rejected_labels"] = summary.rejected;
  analysis["estimates"] = estimates;

  write_json(out / "analysis.json", analysis);
}

// --- report -----------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in = open_in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    for (std::string_view f : split(line, ',')) row.emplace_back(f);
    rows.push_back(std::move(row));
  }
  return rows;
}

void markdown_table(std::ostream &out, const std::vector<std::string> &header,
                    const std::vector<std::vector<std::string>> &rows) {
  out << '|';
  for (const std::string &h : header) out << ' ' << h << " |";
  out << "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
  out << '\n';
  for (const auto &row : rows) {
    out << '|';
    for (const std::string &c : row) out << ' ' << c << " |";
    out << '\n';
  }
  out << '\n';
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

void emit_report(const fs::path &run_dir) {
  const fs::path in = run_dir / "analyze";
  std::vector<std::string> required = {"analysis.json",     "candidate_counts.csv", "tau.csv",
                                       "novelty_rates.csv", "selection.csv",        "summary.csv",
                                       "estimates.csv"};
  std::vector<std::string> missing;
  json analysis;
  if (fs::is_regular_file(in / "analysis.json")) {
    analysis = read_json(in / "analysis.json");
    for (const json &s : analysis.value("scorers", json::array())) {
      required.push_back(s.at("histogram").at("file").get<std::string>());
    }
  }
  for (const std::string &f : required) {
    if (!fs::is_regular_file(in / f)) missing.push_back("analyze/" + f);
  }
  if (!missing.empty()) {
    throw InputError("cannot build the report; missing " + join(missing, ", "));
  }

  const fs::path out = run_dir / "report";
  fs::create_directories(out);
  for (const std::string &f : required) {
    if (f != "analysis.json") copy_over(in / f, out / f);
  }

  std::ofstream md = open_out(out / "report.md");
  md << "# Run report\n\n";

  md << "## Statistics of candidate triples\n\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (const json &c : analysis.at("candidate_counts")) {
      rows.push_back({c.at("relation").get<std::string>(), std::to_string(c.at("count").get<long long>())});
    }
    markdown_table(md, {"Relation", "# of Candidates"}, rows);
  }

  md << "## Score histograms\n\n";
  const json &scorers = analysis.at("scorers");
  if (scorers.empty()) md << "No scorers configured.\n\n";
  for (const json &s : scorers) {
    const json &h = s.at("histogram");
    md << "### " << s.at("name").get<std::string>() << "\n\n";
    md << s.at("scored").get<std::size_t>() << " scored triples, range ["
       << format_double(h.at("lo").get<double>()) << ", " << format_double(h.at("hi").get<double>())
       << "], " << h.at("out_of_range").get<std::size_t>() << " outside the range.\n\n";
    const auto counts = h.at("counts").get<std::vector<std::size_t>>();
    const double lo = h.at("lo").get<double>(), hi = h.at("hi").get<double>();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double a = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(counts.size());
      const double b = i + 1 == counts.size() ? hi : lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(counts.size());
      rows.push_back({"[" + fixed(a, 3) + ", " + fixed(b, 3) + (i + 1 == counts.size() ? "]" : ")"),
                      std::to_string(counts[i])});
    }
    markdown_table(md, {"Bin", "Count"}, rows);
  }

  md << "## Kendall's tau between scorers\n\n";
  if (scorers.size() < 2) {
    md << "not applicable (<2 scorers)\n\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const json &t : analysis.at("tau")) {
      rows.push_back({t.at("a").get<std::string>(), t.at("b").get<std::string>(),
                      t.at("tau").is_null() ? "n/a" : fixed(t.at("tau").get<double>(), 4),
                      std::to_string(t.at("pairs").get<std::size_t>())});
    }
    markdown_table(md, {"Scorer A", "Scorer B", "tau-b", "Shared triples"}, rows);
  }

  md << "## Novelty rates\n\n";
  {
    auto csv = read_csv(in / "novelty_rates.csv");
    // relation,reference,mode,novel,total,rate -> one row per (relation, reference)
    std::map<std::pair<std::string, std::string>, std::pair<std::string, std::string>> cells;
    std::vector<std::pair<std::string, std::string>> order;
    for (std::size_t i = 1; i < csv.size(); ++i) {
      const auto &r = csv[i];
      if (r.size() != 6) continue;
      auto key = std::pair{r[0], r[1]};
      if (!cells.contains(key)) order.push_back(key);
      const std::string cell = fixed(*parse_double(r[5]), 4) + " (" + r[3] + "/" + r[4] + ")";
      (r[2] == "same-relation" ? cells[key].first : cells[key].second) = cell;
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto &key : order) {
      rows.push_back({key.first, key.second, cells[key].first, cells[key].second});
    }
    markdown_table(md, {"Relation", "Reference", "Novel (same relation)", "Novel (any relation)"}, rows);
  }

  md << "## Qualified triples\n\n";
  {
    auto csv = read_csv(in / "selection.csv");
    std::vector<std::vector<std::string>> rows(csv.begin() + (csv.empty() ? 0 : 1), csv.end());
    markdown_table(md, {"Scorer", "Relation", "Criterion", "Scored", "Qualified"}, rows);
  }

  md << "## Manual evaluation\n\n";
  const json &summary = analysis.at("summary");
  bool any_labels = false;
  {
    std::vector<std::vector<std::string>> rows;
    for (const json &r : summary) {
      if (r.at("labels").get<std::size_t>() == 0) continue;
      any_labels = true;
      rows.push_back({r.at("relation").get<std::string>(), r.at("scorer").get<std::string>(),
                      std::to_string(r.at("qualified").get<std::size_t>()),
                      fixed(r.at("validity").get<double>(), 2),
                      fixed(r.at("valid_and_novel").get<double>(), 2)});
    }
    if (any_labels) {
      markdown_table(md, {"Relation", "Scorer", "Qual.", "V.", "V.N."}, rows);
    } else {
      md << "No annotation labels recorded.\n\n";
    }
  }

  md << "## Valid-count estimates\n\n";
  const json &estimates = analysis.at("estimates");
  if (estimates.empty()) {
    md << "No annotation labels recorded.\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const json &e : estimates) {
      const auto q = e.at("qualified").get<std::size_t>();
      const double v = e.at("validity").get<double>();
      const double est = e.at("estimate").get<double>();
      rows.push_back({e.at("relation").get<std::string>(), e.at("scorer").get<std::string>(),
                      std::to_string(q) + " × " + format_double(v) + " = " + format_double(est)});
    }
    markdown_table(md, {"Relation", "Scorer", "Qual. × V."}, rows);
  }
}

RunLock::RunLock(const fs::path &run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + '\n';
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw Error("cannot create " + path_.string() + ": " + std::strerror(errno));
    // A lock left by a process that no longer exists is stale.
    std::ifstream in(path_);
    long long owner = 0;
    if (attempt == 0 && (in >> owner) && owner > 0 && ::kill(static_cast<pid_t>(owner), 0) != 0 &&
        errno == ESRCH) {
      fs::remove(path_);
      continue;
    }
    break;
  }
  throw Error(path_.parent_path().string() + " is in use by another process (remove " +
              path_.string() + " if it is stale)");
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

void write_manifest(const PipelineConfig &cfg, const fs::path &run_dir) {
  json m;
  const std::string text = cfg.canonical_text();
  m["config_sha256"] = sha256_hex(text);
  m["config"] = json::array();
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty()) m["config"].push_back(std::string(line));
  }
  m["seed"] = cfg.seed;

  json inputs = json::object();
  auto input = [&](const char *role, const fs::path &p) {
    if (!p.empty() && fs::is_regular_file(p)) {
      inputs[role] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
    }
  };
  input("kg_dump", cfg.kg_dump);
  input("training", cfg.training);
  input("definitions", cfg.definitions);
  input("pretagged", cfg.pretagged);
  input("lexicon", cfg.lexicon);
  input("suffix_rules", cfg.suffix_rules);
  input("stopwords", cfg.stopwords);
  input("lemmas", cfg.lemmas);
  input("patterns", cfg.patterns);
  for (const ScorerConfig &s : cfg.scorers) input(("scorer." + s.name).c_str(), s.path);
  m["inputs"] = inputs;

  json stages = json::array();
  for (Stage s : kAllStages) {
    const fs::path stamp = run_dir / stage_directory(s) / "stage.json";
    if (!fs::is_regular_file(stamp)) continue;
    const json j = read_json(stamp);
    json outputs = json::object();
    for (const auto &[rel, digest] : j.at("outputs").items()) {
      outputs[std::string(stage_directory(s)) + '/' + rel] = digest;
    }
    stages.push_back({{"stage", stage_name(s)}, {"fingerprint", j.at("fingerprint")}, {"outputs", outputs}});
  }
  m["stages"] = stages;

  const fs::path counts = run_dir / "extract" / "counts.tsv";
  if (fs::is_regular_file(counts)) {
    json c = json::object();
    std::ifstream in = open_in(counts);
    std::string line;
    while (std::getline(in, line)) {
      auto cols = split(line, '\t');
      if (cols.size() == 2) {
        if (auto n = parse_int(cols[1])) c[std::string(cols[0])] = *n;
      }
    }
    m["candidate_counts"] = c;
  }
  write_json(run_dir / "manifest.json", m);
}

}  // namespace

std::vector<StageOutcome> run_pipeline(const PipelineConfig &config, const fs::path &run_dir,
                                       const RunOptions &options) {
  config.validate();
  std::set<Stage> selected(options.stages.begin(), options.stages.end());
  if (selected.empty()) selected.insert(kAllStages.begin(), kAllStages.end());

  RunLock lock(run_dir);
  Runner runner(config, run_dir);
  std::vector<StageOutcome> outcomes;
  for (Stage s : kAllStages) {
    if (!selected.contains(s)) continue;
    outcomes.push_back(runner.run(s, options.force));
  }
  write_manifest(config, run_dir);
  return outcomes;
}

std::size_t write_negatives(const PipelineConfig &config, const fs::path &out, std::size_t count,
                            std::uint64_t seed) {
  std::vector<Triple> positives;
  if (!config.training.empty()) {
    std::ifstream in = open_in(config.training);
    positives = load_training_triples(in, config.training.filename().string()).items;
  } else {
    KgDumpOptions ko;
    ko.language = config.language;
    ko.metadata_filter = config.metadata_filter;
    ko.source_name = config.kg_dump.filename().string();
    std::ifstream in = open_in(config.kg_dump);
    positives = parse_kg_dump(in, ko).items;
  }
  const std::vector<NegativeTriple> negatives = generate_negative_triples(positives, count, seed);
  std::ofstream o = open_out(out);
  write_negatives_tsv(o, negatives);
  return negatives.size();
}

}  // namespace cskm
