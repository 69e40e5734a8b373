#include "cskm/annotation.h"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T field(const json &j, const char *name) {
  auto it = j.find(name);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception &) {
    throw ValidationError(std::string("field '") + name + "' has the wrong type");
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Keeps the file up to its last newline; returns the complete lines.
std::vector<std::string> read_log(const fs::path &path, bool truncate_torn_tail) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  const std::size_t complete = data.rfind('\n') == std::string::npos ? 0 : data.rfind('\n') + 1;
  std::size_t pos = 0;
  while (pos < complete) {
    std::size_t nl = data.find('\n', pos);
    lines.push_back(data.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (truncate_torn_tail && complete < data.size()) {
    in.close();
    fs::resize_file(path, complete);
  }
  return lines;
}

std::FILE *open_append(const fs::path &path) {
  std::FILE *f = std::fopen(path.c_str(), "ab");
  if (f == nullptr) throw InputError("cannot open " + path.string() + " for appending");
  return f;
}

Proportions finish(Proportions p) {
  if (p.labeled > 0) {
    p.validity = static_cast<double>(p.valid) / static_cast<double>(p.labeled);
    p.valid_and_novel = static_cast<double>(p.valid_novel) / static_cast<double>(p.labeled);
  }
  return p;
}

}  // namespace

json to_json(const TripleKey &key) {
  return {{"head", key.head}, {"relation", relation_name(key.relation)}, {"tail", key.tail}};
}

TripleKey triple_key_from_json(const json &j) {
  if (!j.is_object()) throw ValidationError("triple must be an object");
  TripleKey k;
  k.head = field<std::string>(j, "head");
  k.relation = relation_from_string(field<std::string>(j, "relation"));
  k.tail = field<std::string>(j, "tail");
  if (trim(k.head).empty() || trim(k.tail).empty()) {
    throw ValidationError("triple head and tail must be non-empty");
  }
  return k;
}

json to_json(const SampleItem &item) {
  json j = to_json(item.key);
  j["score"] = item.score;
  j["rank"] = item.rank;
  j["term"] = item.term;
  j["sense_index"] = item.sense_index;
  j["source_id"] = item.source_id;
  j["definition"] = item.definition ? json(*item.definition) : json(nullptr);
  j["highlight"] = item.highlight ? json::array({item.highlight->first, item.highlight->second})
                                  : json(nullptr);
  if (item.automated_novelty) {
    const NoveltyVerdict &v = *item.automated_novelty;
    j["automated_novelty"] = {
        {"novel", v.novel},
        {"witness", v.matched_reference ? to_json(*v.matched_reference) : json(nullptr)}};
  } else {
    j["automated_novelty"] = nullptr;
  }
  j["context_missing"] = item.context_missing;
  return j;
}

SampleItem sample_item_from_json(const json &j) {
  SampleItem item;
  item.key = triple_key_from_json(j);
  item.score = field<double>(j, "score");
  if (j.contains("rank")) item.rank = field<std::size_t>(j, "rank");
  if (j.contains("term")) item.term = field<std::string>(j, "term");
  if (j.contains("sense_index")) item.sense_index = field<int>(j, "sense_index");
  if (j.contains("source_id")) item.source_id = field<std::string>(j, "source_id");
  if (j.contains("definition") && !j["definition"].is_null()) {
    item.definition = field<std::string>(j, "definition");
  }
  if (j.contains("highlight") && !j["highlight"].is_null()) {
    auto h = field<std::vector<std::size_t>>(j, "highlight");
    if (h.size() != 2 || h[0] > h[1]) throw ValidationError("highlight must be [begin, end]");
    item.highlight = std::pair{h[0], h[1]};
  }
  if (j.contains("automated_novelty") && !j["automated_novelty"].is_null()) {
    const json &v = j["automated_novelty"];
    NoveltyVerdict verdict;
    verdict.novel = field<bool>(v, "novel");
    if (v.contains("witness") && !v["witness"].is_null()) {
      verdict.matched_reference = triple_key_from_json(v["witness"]);
    }
    item.automated_novelty = verdict;
  }
  if (j.contains("context_missing")) item.context_missing = field<bool>(j, "context_missing");
  // Without a definition or a span that lies inside it there is no context to show.
  if (!item.definition ||
      (item.highlight && item.highlight->second > item.definition->size())) {
    item.context_missing = true;
    item.highlight.reset();
  } else if (!item.highlight) {
    item.context_missing = true;
  }
  return item;
}

json to_json(const SampleFile &sample) {
  json items = json::array();
  for (const SampleItem &item : sample.items) items.push_back(to_json(item));
  return {{"relation", relation_name(sample.relation)},
          {"scorer_id", sample.scorer_id},
          {"qualified_count", sample.qualified_count},
          {"items", std::move(items)}};
}

SampleFile sample_file_from_json(const json &j) {
  if (!j.is_object()) throw ValidationError("sample must be a JSON object");
  SampleFile s;
  s.relation = relation_from_string(field<std::string>(j, "relation"));
  s.scorer_id = field<std::string>(j, "scorer_id");
  if (s.scorer_id.empty()) throw ValidationError("scorer_id must be non-empty");
  if (j.contains("qualified_count")) s.qualified_count = field<std::size_t>(j, "qualified_count");
  const json items = field<json>(j, "items");
  if (!items.is_array()) throw ValidationError("items must be an array");
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      s.items.push_back(sample_item_from_json(items[i]));
    } catch (const ValidationError &e) {
      throw ValidationError("item " + std::to_string(i) + ": " + e.what());
    }
  }
  if (s.qualified_count < s.items.size()) s.qualified_count = s.items.size();
  return s;
}

SampleFile read_sample_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open sample file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw InputError("sample file " + path.string() + " is not valid JSON: " + e.what());
  }
  return sample_file_from_json(j);
}

void write_sample_file(const fs::path &path, const SampleFile &sample) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json(sample).dump(2) << '\n';
}

json to_json(const LabelRecord &label) {
  json j = {{"session_id", label.session_id}};
  j.update(to_json(label.key));
  j["annotator_id"] = label.annotator_id;
  j["valid"] = label.valid;
  j["novel"] = label.novel;
  j["labeled_at"] = label.labeled_at;
  return j;
}

LabelRecord label_record_from_json(const json &j) {
  LabelRecord r;
  r.session_id = field<std::string>(j, "session_id");
  r.key = triple_key_from_json(j);
  r.annotator_id = field<std::string>(j, "annotator_id");
  r.valid = field<bool>(j, "valid");
  r.novel = field<bool>(j, "novel");
  if (j.contains("labeled_at")) r.labeled_at = field<std::string>(j, "labeled_at");
  return r;
}

json to_json(const AnnotationLabel &label) {
  json j = to_json(label.key);
  j["scorer_id"] = label.scorer_id;
  j["annotator"] = label.annotator;
  j["valid"] = label.valid;
  j["novel"] = label.novel;
  return j;
}

AnnotationLabel annotation_label_from_json(const json &j) {
  AnnotationLabel l;
  l.key = triple_key_from_json(j);
  l.scorer_id = field<std::string>(j, "scorer_id");
  l.annotator = field<std::string>(j, "annotator");
  l.valid = field<bool>(j, "valid");
  l.novel = field<bool>(j, "novel");
  return l;
}

AnnotationStore::AnnotationStore(fs::path dir, Clock clock, bool read_only)
    : dir_(std::move(dir)), clock_(clock ? std::move(clock) : Clock(utc_now)), read_only_(read_only) {
  if (!read_only_) fs::create_directories(dir_);
  replay();
  if (!read_only_) {
    sessions_log_ = open_append(dir_ / "sessions.jsonl");
    labels_log_ = open_append(dir_ / "labels.jsonl");
  }
}

AnnotationStore::~AnnotationStore() {
  if (sessions_log_ != nullptr) std::fclose(sessions_log_);
  if (labels_log_ != nullptr) std::fclose(labels_log_);
}

void AnnotationStore::replay() {
  std::size_t line_no = 0;
  for (const std::string &line : read_log(dir_ / "sessions.jsonl", !read_only_)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      SessionState s;
      s.session.session_id = field<std::string>(j, "session_id");
      s.session.created_at = field<std::string>(j, "created_at");
      SampleFile sample = sample_file_from_json(j);
      s.session.relation = sample.relation;
      s.session.scorer_id = sample.scorer_id;
      s.session.qualified_count = sample.qualified_count;
      s.session.items = std::move(sample.items);
      for (std::size_t i = 0; i < s.session.items.size(); ++i) s.index[s.session.items[i].key] = i;
      const std::string id = s.session.session_id;
      if (!sessions_.emplace(id, std::move(s)).second) throw ValidationError("duplicate session " + id);
      order_.push_back(id);
    } catch (const json::exception &e) {
      throw ParseError(std::string("sessions.jsonl: ") + e.what(), line_no);
    } catch (const ValidationError &e) {
      throw ParseError(std::string("sessions.jsonl: ") + e.what(), line_no);
    }
  }
  line_no = 0;
  for (const std::string &line : read_log(dir_ / "labels.jsonl", !read_only_)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const LabelRecord r = label_record_from_json(json::parse(line));
      auto it = sessions_.find(r.session_id);
      if (it == sessions_.end()) throw ValidationError("label for unknown session " + r.session_id);
      auto item = it->second.index.find(r.key);
      if (item == it->second.index.end()) throw ValidationError("label for a triple outside its session");
      it->second.labels[{item->second, r.annotator_id}] = {r.valid, r.novel};
    } catch (const json::exception &e) {
      throw ParseError(std::string("labels.jsonl: ") + e.what(), line_no);
    } catch (const ValidationError &e) {
      throw ParseError(std::string("labels.jsonl: ") + e.what(), line_no);
    }
  }
}

void AnnotationStore::append(std::FILE *file, const json &record) {
  if (read_only_) throw Error("annotation store is read-only");
  const std::string line = record.dump() + '\n';
  if (std::fwrite(line.data(), 1, line.size(), file) != line.size() || std::fflush(file) != 0 ||
      ::fsync(::fileno(file)) != 0) {
    throw Error("failed to append to the annotation log in " + dir_.string());
  }
}

const AnnotationStore::SessionState &AnnotationStore::state(const std::string &session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  return it->second;
}

std::string AnnotationStore::create_session(const SampleFile &sample) {
  if (sample.items.empty()) throw ValidationError("sample is empty");
  if (sample.scorer_id.empty()) throw ValidationError("scorer_id must be non-empty");
  SessionState s;
  for (std::size_t i = 0; i < sample.items.size(); ++i) {
    const TripleKey &key = sample.items[i].key;
    if (key.relation != sample.relation) {
      throw ValidationError("item " + std::to_string(i) + " has relation " +
                            std::string(relation_name(key.relation)) + ", sample is " +
                            std::string(relation_name(sample.relation)));
    }
    if (!s.index.emplace(key, i).second) {
      throw ValidationError("duplicate triple (" + key.head + ", " +
                            std::string(relation_name(key.relation)) + ", " + key.tail + ")");
    }
  }
  // Normalise context flags the same way a replay would.
  const SampleFile normalised = sample_file_from_json(to_json(sample));

  std::unique_lock lock(mutex_);
  char id[16];
  std::snprintf(id, sizeof id, "s%04zu", order_.size() + 1);
  s.session.session_id = id;
  s.session.relation = normalised.relation;
  s.session.scorer_id = normalised.scorer_id;
  s.session.qualified_count = normalised.qualified_count;
  s.session.items = normalised.items;
  s.session.created_at = clock_();

  json record = {{"session_id", s.session.session_id}, {"created_at", s.session.created_at}};
  record.update(to_json(normalised));
  append(sessions_log_, record);
  order_.push_back(id);
  sessions_.emplace(id, std::move(s));
  return id;
}

std::vector<AnnotationSession> AnnotationStore::sessions() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationSession> out;
  for (const std::string &id : order_) out.push_back(sessions_.at(id).session);
  return out;
}

NextItem AnnotationStore::next_unlabeled(const std::string &session_id,
                                         const std::string &annotator_id) const {
  std::shared_lock lock(mutex_);
  const SessionState &s = state(session_id);
  NextItem next;
  next.total = s.session.items.size();
  next.done = true;
  Proportions p;
  for (std::size_t i = 0; i < s.session.items.size(); ++i) {
    auto it = s.labels.find({i, annotator_id});
    if (it == s.labels.end()) {
      if (next.done) {
        next.done = false;
        next.index = i;
        next.item = &s.session.items[i];
      }
      continue;
    }
    ++p.labeled;
    if (it->second.first) {
      ++p.valid;
      if (it->second.second) ++p.valid_novel;
    }
  }
  next.progress = finish(p);
  return next;
}

SessionSummary AnnotationStore::submit_label(const std::string &session_id, const TripleKey &key,
                                             const std::string &annotator_id, bool valid,
                                             bool novel) {
  if (trim(annotator_id).empty()) throw ValidationError("annotator must be non-empty");
  std::unique_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  SessionState &s = it->second;
  auto item = s.index.find(key);
  if (item == s.index.end()) {
    throw ValidationError("triple (" + key.head + ", " + std::string(relation_name(key.relation)) +
                          ", " + key.tail + ") is not in session " + session_id);
  }
  LabelRecord r{session_id, key, annotator_id, valid, novel, clock_()};
  append(labels_log_, to_json(r));
  s.labels[{item->second, annotator_id}] = {valid, novel};
  return summarize(s);
}

SessionSummary AnnotationStore::session_summary(const std::string &session_id) const {
  std::shared_lock lock(mutex_);
  return summarize(state(session_id));
}

SessionSummary AnnotationStore::summarize(const SessionState &s) const {
  SessionSummary out;
  out.session = &s.session;
  for (const auto &[who, judgment] : s.labels) {
    Proportions &p = out.per_annotator[who.second];
    ++p.labeled;
    ++out.pooled.labeled;
    if (judgment.first) {
      ++p.valid;
      ++out.pooled.valid;
      if (judgment.second) {
        ++p.valid_novel;
        ++out.pooled.valid_novel;
      }
    }
    out.labels.push_back({s.session.items[who.first].key, s.session.scorer_id, who.second,
                          judgment.first, judgment.second});
  }
  for (auto &[who, p] : out.per_annotator) p = finish(p);
  out.pooled = finish(out.pooled);

  SampleRegistration reg{s.session.relation, s.session.scorer_id, s.session.qualified_count, {}};
  for (const SampleItem &item : s.session.items) reg.keys.push_back(item.key);
  const EvaluationSummary eval = summarize_annotations(out.labels, {reg});
  out.evaluation = eval.rows.front();
  return out;
}

std::vector<AnnotationLabel> AnnotationStore::analysis_labels() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationLabel> out;
  for (const std::string &id : order_) {
    const SessionState &s = sessions_.at(id);
    for (const auto &[who, judgment] : s.labels) {
      out.push_back({s.session.items[who.first].key, s.session.scorer_id, who.second,
                     judgment.first, judgment.second});
    }
  }
  return out;
}

std::vector<SampleRegistration> AnnotationStore::registrations() const {
  std::shared_lock lock(mutex_);
  std::vector<SampleRegistration> out;
  for (const std::string &id : order_) {
    const AnnotationSession &s = sessions_.at(id).session;
    SampleRegistration reg{s.relation, s.scorer_id, s.qualified_count, {}};
    for (const SampleItem &item : s.items) reg.keys.push_back(item.key);
    out.push_back(std::move(reg));
  }
  return out;
}

std::pair<std::vector<AnnotationLabel>, std::vector<SampleRegistration>>
load_annotations(const fs::path &dir) {
  if (!fs::is_directory(dir)) return {};
  AnnotationStore store(dir, {}, true);
  return {store.analysis_labels(), store.registrations()};
}

}  // namespace cskm
