#include "cskm/novelty.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>

#include "cskm/error.h"
#include "cskm/porter_stemmer.h"
#include "cskm/text.h"

namespace cskm {

std::string ConceptBag::canonical() const { return join(stems, " "); }

NormalizationPipeline NormalizationPipeline::load(std::istream &stopwords, std::istream *lemmas) {
  std::unordered_set<std::string> stop;
  std::string line;
  while (std::getline(stopwords, line)) {
    auto w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    stop.insert(to_lower(w));
  }
  std::unordered_map<std::string, std::string> lemma_map;
  if (lemmas != nullptr) {
    std::size_t line_no = 0;
    while (std::getline(*lemmas, line)) {
      ++line_no;
      auto row = trim(line);
      if (row.empty() || row.front() == '#') continue;
      auto cols = split(row, '\t');
      if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
        throw ParseError("expected word<TAB>lemma", line_no);
      }
      lemma_map.emplace(to_lower(trim(cols[0])), to_lower(trim(cols[1])));
    }
  }
  return NormalizationPipeline(std::move(stop), std::move(lemma_map));
}

NormalizationPipeline NormalizationPipeline::load_files(const std::string &stopwords_path,
                                                        const std::string &lemmas_path) {
  std::ifstream stop(stopwords_path);
  if (!stop) throw InputError("cannot open stopword list " + stopwords_path);
  if (lemmas_path.empty()) return load(stop, nullptr);
  std::ifstream lem(lemmas_path);
  if (!lem) throw InputError("cannot open lemma lexicon " + lemmas_path);
  return load(stop, &lem);
}

bool NormalizationPipeline::is_stopword(std::string_view word) const {
  return stopwords_.contains(std::string(word));
}

const std::string &NormalizationPipeline::lemma(const std::string &word) const {
  auto it = lemmas_.find(word);
  return it == lemmas_.end() ? word : it->second;
}

ConceptBag NormalizationPipeline::normalize(std::string_view text) const {
  ConceptBag bag;
  for (const std::string &w : word_tokens(text)) {
    if (is_stopword(w)) continue;
    bag.stems.push_back(porter_stem(lemma(w)));
  }
  std::sort(bag.stems.begin(), bag.stems.end());
  return bag;
}

std::string ReferenceIndex::pair_key(const TripleKey &t) const {
  // Unit separator cannot occur inside a stem.
  return pipeline_->normalize(t.head).canonical() + '\x1f' +
         pipeline_->normalize(t.tail).canonical();
}

void ReferenceIndex::add(const TripleKey &reference) {
  std::string key = pair_key(reference);
  by_relation_[relation_index(reference.relation)].try_emplace(key, reference);
  any_relation_.try_emplace(std::move(key), reference);
  ++size_;
}

NoveltyVerdict ReferenceIndex::lookup(const TripleKey &candidate, bool relation_agnostic) const {
  const std::string key = pair_key(candidate);
  const auto &map = relation_agnostic ? any_relation_ : by_relation_[relation_index(candidate.relation)];
  NoveltyVerdict v;
  if (auto it = map.find(key); it != map.end()) {
    v.novel = false;
    v.matched_reference = it->second;
  }
  return v;
}

ReferenceIndex build_reference_index(const std::vector<TripleKey> &references,
                                     const NormalizationPipeline &pipeline) {
  ReferenceIndex index(pipeline);
  for (const TripleKey &r : references) index.add(r);
  return index;
}

NoveltyRate novelty_rate(const std::vector<TripleKey> &candidates, const ReferenceIndex &index,
                         bool relation_agnostic) {
  NoveltyRate r;
  r.total = candidates.size();
  for (const TripleKey &c : candidates) {
    if (index.lookup(c, relation_agnostic).novel) ++r.novel;
  }
  if (r.total == 0) {
    r.empty_input = true;
    r.rate = 1.0;
  } else {
    r.rate = static_cast<double>(r.novel) / static_cast<double>(r.total);
  }
  return r;
}

EmbeddingDistance embedding_novelty_distance(const TripleKey &candidate,
                                             const std::vector<TripleKey> &references,
                                             const EmbeddingTable &embeddings) {
  if (references.empty()) {
    throw ValidationError("embedding novelty distance needs at least one reference");
  }
  const AveragedVector ch = embeddings.average(candidate.head);
  const AveragedVector ct = embeddings.average(candidate.tail);
  EmbeddingDistance best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < references.size(); ++i) {
    const AveragedVector rh = embeddings.average(references[i].head);
    const AveragedVector rt = embeddings.average(references[i].tail);
    const double d = (ch.vector - rh.vector).norm() + (ct.vector - rt.vector).norm();
    if (d < best.distance) {
      best.distance = d;
      best.nearest = i;
      best.zero_vector_used = ch.all_oov() || ct.all_oov() || rh.all_oov() || rt.all_oov();
    }
  }
  return best;
}

}  // namespace cskm
