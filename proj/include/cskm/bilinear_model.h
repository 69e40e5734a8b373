#ifndef CSKM_BILINEAR_MODEL_H_
#define CSKM_BILINEAR_MODEL_H_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "cskm/embeddings.h"
#include "cskm/triple.h"

namespace cskm {

// Averaged-embedding bilinear triple scorer:
//   v = mean word embedding of a term (dimension d)
//   u = tanh(W v + b)                 (dimension r)
//   score = sigmoid(u1' M_R u2)
class BilinearModel {
 public:
  BilinearModel(EmbeddingTable embeddings, Eigen::MatrixXd transform, Eigen::VectorXd bias);

  std::size_t embedding_dim() const { return embeddings_.dim(); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(bias_.size()); }

  // Throws ValidationError unless the matrix is r x r.
  void set_relation_matrix(Relation r, Eigen::MatrixXd m);
  const Eigen::MatrixXd *relation_matrix(Relation r) const;
  bool complete() const;

  const EmbeddingTable &embeddings() const { return embeddings_; }
  const Eigen::MatrixXd &transform() const { return transform_; }
  const Eigen::VectorXd &bias() const { return bias_; }

  // Text format:
  //   cskm-bilinear 1
  //   dims <d> <r>
  //   relations <n> <name>...
  //   embeddings <count>
  //   <word> <d numbers>          (count lines)
  //   transform                   then r rows of d numbers
  //   bias                        then r numbers
  //   relation <name>             then r rows of r numbers, once per listed relation
  // Lines starting with '#' are comments.
  static BilinearModel load(std::istream &in);
  static BilinearModel load_file(const std::string &path);
  void save(std::ostream &out) const;

 private:
  EmbeddingTable embeddings_;
  Eigen::MatrixXd transform_;
  Eigen::VectorXd bias_;
  std::array<std::optional<Eigen::MatrixXd>, kRelationCount> relations_;
};

struct TermEncoding {
  Eigen::VectorXd v;
  Eigen::VectorXd u;
  double oov_fraction = 0;
};

TermEncoding encode_term(std::string_view text, const BilinearModel &model);

// Logistic function kept strictly inside (0, 1) for finite input.
double sigmoid(double x);

// u1' M_R u2. Throws NotFoundError if the model has no matrix for the relation.
double bilinear_logit(std::string_view head, Relation relation, std::string_view tail,
                      const BilinearModel &model);

}  // namespace cskm

#endif  // CSKM_BILINEAR_MODEL_H_
