#ifndef CSKM_EMBEDDINGS_H_
#define CSKM_EMBEDDINGS_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

namespace cskm {

// Mean of the embeddings of a phrase's in-vocabulary words.
struct AveragedVector {
  Eigen::VectorXd vector;
  std::size_t words = 0;
  std::size_t oov = 0;

  // Fraction of words without an embedding; 1 for a phrase with no words.
  double oov_fraction() const {
    return words == 0 ? 1.0 : static_cast<double>(oov) / static_cast<double>(words);
  }
  bool all_oov() const { return oov == words; }
};

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  // Throws ValidationError if the vector's size differs from dim().
  void add(std::string word, Eigen::VectorXd vector);
  const Eigen::VectorXd *find(std::string_view word) const;

  // Lowercases and tokenizes the phrase, skipping punctuation. All-OOV phrases
  // average to the zero vector.
  AveragedVector average(std::string_view phrase) const;

  const std::unordered_map<std::string, Eigen::VectorXd> &vectors() const { return vectors_; }

 private:
  std::size_t dim_;
  std::unordered_map<std::string, Eigen::VectorXd> vectors_;
};

}  // namespace cskm

#endif  // CSKM_EMBEDDINGS_H_
