#ifndef CSKM_ANNOTATION_H_
#define CSKM_ANNOTATION_H_

#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cskm/analysis.h"
#include "cskm/novelty.h"
#include "cskm/triple.h"

namespace cskm {

// One sampled triple with the context an annotator needs.
struct SampleItem {
  TripleKey key;
  double score = 0;
  std::size_t rank = 0;  // 1-based position in the scorer's ranking
  std::string term;
  int sense_index = 0;
  std::string source_id;
  std::optional<std::string> definition;
  // Byte range of the matched span inside definition.
  std::optional<std::pair<std::size_t, std::size_t>> highlight;
  // Advisory automated verdict; does not constrain the human label.
  std::optional<NoveltyVerdict> automated_novelty;
  // Set when the definition or span could not be recovered.
  bool context_missing = false;
};

// Sample of one (relation, scorer) cell as written by the sample stage.
struct SampleFile {
  Relation relation = Relation::kAtLocation;
  std::string scorer_id;
  std::size_t qualified_count = 0;
  std::vector<SampleItem> items;
};

nlohmann::json to_json(const TripleKey &key);
TripleKey triple_key_from_json(const nlohmann::json &j);
nlohmann::json to_json(const SampleItem &item);
SampleItem sample_item_from_json(const nlohmann::json &j);
nlohmann::json to_json(const SampleFile &sample);
// Throws ValidationError describing the first bad field.
SampleFile sample_file_from_json(const nlohmann::json &j);
SampleFile read_sample_file(const std::filesystem::path &path);
void write_sample_file(const std::filesystem::path &path, const SampleFile &sample);

struct AnnotationSession {
  std::string session_id;
  Relation relation = Relation::kAtLocation;
  std::string scorer_id;
  std::size_t qualified_count = 0;
  std::vector<SampleItem> items;
  std::string created_at;
};

struct LabelRecord {
  std::string session_id;
  TripleKey key;
  std::string annotator_id;
  bool valid = false;
  bool novel = false;
  std::string labeled_at;
};

nlohmann::json to_json(const LabelRecord &label);
LabelRecord label_record_from_json(const nlohmann::json &j);

// The analysis input record: head, relation, tail, scorer_id, annotator, valid, novel.
nlohmann::json to_json(const AnnotationLabel &label);
AnnotationLabel annotation_label_from_json(const nlohmann::json &j);

struct Proportions {
  std::size_t labeled = 0;
  std::size_t valid = 0;
  std::size_t valid_novel = 0;
  // valid / labeled and valid_novel / labeled; 0 before the first label.
  double validity = 0;
  double valid_and_novel = 0;
};

struct NextItem {
  bool done = false;
  std::size_t index = 0;  // position of item in the sample
  const SampleItem *item = nullptr;
  std::size_t total = 0;
  Proportions progress;  // this annotator's
};

struct SessionSummary {
  const AnnotationSession *session = nullptr;
  std::map<std::string, Proportions> per_annotator;
  // Sums over annotators, so the pooled validity is the label-weighted mean.
  Proportions pooled;
  // The analysis row for the session's cell, and the labels it was built from.
  SummaryRow evaluation;
  std::vector<AnnotationLabel> labels;
};

// Sessions and labels kept as two append-only JSON-lines logs in one
// directory (sessions.jsonl, labels.jsonl). The constructor replays both;
// later labels for the same (session, triple, annotator) replace earlier ones.
// Appends are serialized and fsynced before a call returns, so an
// acknowledged write survives a crash. An unterminated final line is a write
// that was never acknowledged and is discarded. Safe for concurrent use.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  // A read-only store never creates or modifies files; writes throw Error.
  explicit AnnotationStore(std::filesystem::path dir, Clock clock = {}, bool read_only = false);
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore &) = delete;
  AnnotationStore &operator=(const AnnotationStore &) = delete;

  // Throws ValidationError for an empty sample, a duplicate triple, or items
  // whose relation differs from the sample's.
  std::string create_session(const SampleFile &sample);

  std::vector<AnnotationSession> sessions() const;

  // Throws NotFoundError for an unknown session.
  NextItem next_unlabeled(const std::string &session_id, const std::string &annotator_id) const;

  // Throws NotFoundError for an unknown session and ValidationError for a
  // triple outside the session or an empty annotator; nothing is logged then.
  SessionSummary submit_label(const std::string &session_id, const TripleKey &key,
                              const std::string &annotator_id, bool valid, bool novel);

  SessionSummary session_summary(const std::string &session_id) const;

  // Every effective label and every session's registration, in the form the
  // analysis consumes.
  std::vector<AnnotationLabel> analysis_labels() const;
  std::vector<SampleRegistration> registrations() const;

  const std::filesystem::path &directory() const { return dir_; }

 private:
  struct SessionState {
    AnnotationSession session;
    std::map<TripleKey, std::size_t> index;
    // (item index, annotator) -> (valid, novel)
    std::map<std::pair<std::size_t, std::string>, std::pair<bool, bool>> labels;
  };

  void replay();
  void append(std::FILE *file, const nlohmann::json &record);
  const SessionState &state(const std::string &session_id) const;
  SessionSummary summarize(const SessionState &s) const;

  std::filesystem::path dir_;
  Clock clock_;
  bool read_only_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, SessionState> sessions_;
  std::vector<std::string> order_;
  std::FILE *sessions_log_ = nullptr;
  std::FILE *labels_log_ = nullptr;
};

// Reads a run directory's annotation logs without opening them for writing.
// Returns empty vectors when the directory does not exist.
std::pair<std::vector<AnnotationLabel>, std::vector<SampleRegistration>>
load_annotations(const std::filesystem::path &dir);

}  // namespace cskm

#endif  // CSKM_ANNOTATION_H_
