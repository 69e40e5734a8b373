#include "cskm/embeddings.h"

#include <algorithm>
#include <vector>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

void EmbeddingTable::add(std::string word, Eigen::VectorXd vector) {
  if (static_cast<std::size_t>(vector.size()) != dim_) {
    throw ValidationError("embedding for '" + word + "' has dimension " +
                          std::to_string(vector.size()) + ", expected " +
                          std::to_string(dim_));
  }
  vectors_.insert_or_assign(std::move(word), std::move(vector));
}

const Eigen::VectorXd *EmbeddingTable::find(std::string_view word) const {
  auto it = vectors_.find(std::string(word));
  return it == vectors_.end() ? nullptr : &it->second;
}

AveragedVector EmbeddingTable::average(std::string_view phrase) const {
  AveragedVector out;
  out.vector = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  std::vector<std::string> known;
  for (std::string &w : word_tokens(phrase)) {
    ++out.words;
    if (find(w) != nullptr) {
      known.push_back(std::move(w));
    } else {
      ++out.oov;
    }
  }
  // Summing in sorted order makes the mean exactly independent of word order.
  std::sort(known.begin(), known.end());
  for (const std::string &w : known) out.vector += *find(w);
  if (!known.empty()) out.vector /= static_cast<double>(known.size());
  return out;
}

}  // namespace cskm
