#include "cskm/bilinear_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "cskm/error.h"
#include "cskm/text.h"

namespace cskm {

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> read_lines(std::istream &in) {
  std::vector<Line> lines;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    auto row = trim(raw);
    if (row.empty() || row.front() == '#') continue;
    std::istringstream ss{std::string(row)};
    Line line{number, {}};
    std::string field;
    while (ss >> field) line.fields.push_back(std::move(field));
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw InputError("read failure in bilinear model");
  return lines;
}

class Reader {
 public:
  explicit Reader(std::vector<Line> lines) : lines_(std::move(lines)) {}

  const Line &next(std::string_view expecting) {
    if (pos_ >= lines_.size()) {
      throw InputError("bilinear model: unexpected end of file, expected " +
                       std::string(expecting));
    }
    return lines_[pos_++];
  }

  const Line &keyword(std::string_view word, std::size_t args) {
    const Line &l = next(word);
    if (l.fields.empty() || l.fields[0] != word || l.fields.size() != args + 1) {
      throw ParseError("expected '" + std::string(word) + "' with " +
                           std::to_string(args) + " argument(s)",
                       l.number);
    }
    return l;
  }

  static std::size_t count(const Line &l, std::size_t i) {
    auto v = parse_int(l.fields[i]);
    if (!v || *v < 0) throw ParseError("expected a non-negative integer", l.number);
    return static_cast<std::size_t>(*v);
  }

  static double number(const Line &l, std::size_t i) {
    auto v = parse_double(l.fields[i]);
    if (!v || !std::isfinite(*v)) {
      throw ParseError("expected a finite number, got '" + l.fields[i] + "'", l.number);
    }
    return *v;
  }

  Eigen::VectorXd row(std::size_t width, std::size_t skip = 0) {
    const Line &l = next("a row of numbers");
    if (l.fields.size() != width + skip) {
      throw ParseError("expected " + std::to_string(width) + " numbers", l.number);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < width; ++i) v(static_cast<Eigen::Index>(i)) = number(l, i + skip);
    return v;
  }

  Eigen::MatrixXd matrix(std::size_t rows, std::size_t cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) m.row(static_cast<Eigen::Index>(i)) = row(cols).transpose();
    return m;
  }

  const Line &peek_last() const { return lines_[pos_ - 1]; }
  bool done() const { return pos_ >= lines_.size(); }

 private:
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

void write_row(std::ostream &out, const Eigen::VectorXd &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out << ' ';
    out << format_double(v(i));
  }
  out << '\n';
}

}  // namespace

BilinearModel::BilinearModel(EmbeddingTable embeddings, Eigen::MatrixXd transform,
                             Eigen::VectorXd bias)
    : embeddings_(std::move(embeddings)),
      transform_(std::move(transform)),
      bias_(std::move(bias)) {
  if (static_cast<std::size_t>(transform_.cols()) != embeddings_.dim() ||
      transform_.rows() != bias_.size()) {
    throw ValidationError("bilinear transform must be r x d and bias of length r");
  }
}

void BilinearModel::set_relation_matrix(Relation r, Eigen::MatrixXd m) {
  const auto h = static_cast<Eigen::Index>(hidden_dim());
  if (m.rows() != h || m.cols() != h) {
    throw ValidationError("matrix for " + std::string(relation_name(r)) + " must be " +
                          std::to_string(h) + "x" + std::to_string(h));
  }
  relations_[relation_index(r)] = std::move(m);
}

const Eigen::MatrixXd *BilinearModel::relation_matrix(Relation r) const {
  const auto &m = relations_[relation_index(r)];
  return m ? &*m : nullptr;
}

bool BilinearModel::complete() const {
  for (const auto &m : relations_) {
    if (!m) return false;
  }
  return true;
}

BilinearModel BilinearModel::load(std::istream &in) {
  Reader reader(read_lines(in));
  const Line &magic = reader.next("header");
  if (magic.fields.size() != 2 || magic.fields[0] != "cskm-bilinear" || magic.fields[1] != "1") {
    throw ParseError("expected header 'cskm-bilinear 1'", magic.number);
  }
  const Line &dims = reader.keyword("dims", 2);
  const std::size_t d = Reader::count(dims, 1);
  const std::size_t r = Reader::count(dims, 2);
  if (d == 0 || r == 0) throw ParseError("dimensions must be positive", dims.number);

  const Line &rels = reader.next("relations");
  if (rels.fields.size() < 2 || rels.fields[0] != "relations") {
    throw ParseError("expected 'relations <n> <name>...'", rels.number);
  }
  const std::size_t n_rel = Reader::count(rels, 1);
  if (rels.fields.size() != n_rel + 2) {
    throw ParseError("relation count does not match listed names", rels.number);
  }
  std::vector<Relation> listed;
  for (std::size_t i = 0; i < n_rel; ++i) {
    auto rel = parse_relation(rels.fields[i + 2]);
    if (!rel) throw ParseError("unknown relation '" + rels.fields[i + 2] + "'", rels.number);
    listed.push_back(*rel);
  }

  const Line &emb = reader.keyword("embeddings", 1);
  const std::size_t n_words = Reader::count(emb, 1);
  EmbeddingTable table(d);
  for (std::size_t i = 0; i < n_words; ++i) {
    Eigen::VectorXd v = reader.row(d, 1);
    table.add(to_lower(reader.peek_last().fields[0]), std::move(v));
  }

  reader.keyword("transform", 0);
  Eigen::MatrixXd transform = reader.matrix(r, d);
  reader.keyword("bias", 0);
  Eigen::VectorXd bias = reader.row(r);

  BilinearModel model(std::move(table), std::move(transform), std::move(bias));
  std::array<bool, kRelationCount> seen{};
  for (std::size_t i = 0; i < n_rel; ++i) {
    const Line &header = reader.keyword("relation", 1);
    auto rel = parse_relation(header.fields[1]);
    if (!rel) throw ParseError("unknown relation '" + header.fields[1] + "'", header.number);
    if (seen[relation_index(*rel)]) throw ParseError("duplicate relation block", header.number);
    seen[relation_index(*rel)] = true;
    model.set_relation_matrix(*rel, reader.matrix(r, r));
  }
  for (Relation rel : listed) {
    if (!seen[relation_index(rel)]) {
      throw InputError("bilinear model: no matrix block for listed relation " +
                       std::string(relation_name(rel)));
    }
  }
  if (!reader.done()) throw InputError("bilinear model: trailing content");
  return model;
}

BilinearModel BilinearModel::load_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open bilinear model " + path);
  return load(in);
}

void BilinearModel::save(std::ostream &out) const {
  out << "cskm-bilinear 1\n";
  out << "dims " << embedding_dim() << ' ' << hidden_dim() << '\n';
  std::vector<Relation> present;
  for (Relation r : kAllRelations) {
    if (relation_matrix(r)) present.push_back(r);
  }
  out << "relations " << present.size();
  for (Relation r : present) out << ' ' << relation_name(r);
  out << '\n';

  std::vector<std::string> words;
  for (const auto &[w, v] : embeddings_.vectors()) words.push_back(w);
  std::sort(words.begin(), words.end());
  out << "embeddings " << words.size() << '\n';
  for (const std::string &w : words) {
    out << w << ' ';
    write_row(out, *embeddings_.find(w));
  }
  out << "transform\n";
  for (Eigen::Index i = 0; i < transform_.rows(); ++i) write_row(out, transform_.row(i).transpose());
  out << "bias\n";
  write_row(out, bias_);
  for (Relation r : present) {
    out << "relation " << relation_name(r) << '\n';
    const Eigen::MatrixXd &m = *relation_matrix(r);
    for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i).transpose());
  }
}

TermEncoding encode_term(std::string_view text, const BilinearModel &model) {
  AveragedVector avg = model.embeddings().average(text);
  TermEncoding enc;
  enc.v = std::move(avg.vector);
  enc.u = (model.transform() * enc.v + model.bias()).array().tanh().matrix();
  enc.oov_fraction = avg.oov_fraction();
  return enc;
}

double sigmoid(double x) {
  double s;
  if (x >= 0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  constexpr double kLow = std::numeric_limits<double>::denorm_min();
  const double high = std::nextafter(1.0, 0.0);
  return std::clamp(s, kLow, high);
}

double bilinear_logit(std::string_view head, Relation relation, std::string_view tail,
                      const BilinearModel &model) {
  const Eigen::MatrixXd *m = model.relation_matrix(relation);
  if (m == nullptr) {
    throw NotFoundError("bilinear model has no matrix for relation " +
                        std::string(relation_name(relation)));
  }
  const TermEncoding h = encode_term(head, model);
  const TermEncoding t = encode_term(tail, model);
  return h.u.dot(*m * t.u);
}

}  // namespace cskm
