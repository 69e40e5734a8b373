#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "../support.h"
#include "cskm/bilinear_model.h"
#include "cskm/embeddings.h"
#include "cskm/scoring.h"

using namespace cskm;
using cskm::testing::fixture;

namespace {

// d = r = 1, embedding 1 for "a", W = 1, b = 0, every M_R = m.
BilinearModel unit_model(double m) {
  EmbeddingTable e(1);
  e.add("a", Eigen::VectorXd::Constant(1, 1.0));
  BilinearModel model(std::move(e), Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1));
  for (Relation r : kAllRelations) model.set_relation_matrix(r, Eigen::MatrixXd::Constant(1, 1, m));
  return model;
}

std::vector<ScoreRecord> records(std::initializer_list<std::tuple<const char *, Relation, double>> rows,
                                 const std::string &scorer = "s") {
  std::vector<ScoreRecord> out;
  for (const auto &[h, r, s] : rows) out.push_back({{h, r, "t"}, scorer, s});
  return out;
}

}  // namespace

TEST_SUITE("embeddings") {

TEST_CASE("averaging skips unknown words and flags all-OOV phrases") {
  EmbeddingTable e(2);
  e.add("mix", Eigen::Vector2d(1, 3));
  e.add("drinks", Eigen::Vector2d(3, 5));
  const AveragedVector v = e.average("Mix, drinks and more");
  CHECK(v.words == 4);
  CHECK(v.oov == 2);
  CHECK(v.oov_fraction() == 0.5);
  CHECK(v.vector == Eigen::Vector2d(2, 4));
  const AveragedVector none = e.average("zzz");
  CHECK(none.all_oov());
  CHECK(none.vector == Eigen::Vector2d::Zero());
  CHECK(e.average("").oov_fraction() == 1.0);
  CHECK_THROWS_AS(e.add("bad", Eigen::Vector3d(1, 2, 3)), ValidationError);
}

}  // TEST_SUITE

TEST_SUITE("scoring") {

TEST_CASE("hand-worked unit model") {
  CHECK(bilinear_score("a", Relation::kIsA, "a", unit_model(0.0)).score == 0.5);
  const double expected = 1.0 / (1.0 + std::exp(-std::tanh(1.0) * std::tanh(1.0)));
  CHECK(bilinear_score("a", Relation::kIsA, "a", unit_model(1.0)).score ==
        doctest::Approx(0.6410733103077226).epsilon(1e-12));
  CHECK(std::abs(bilinear_score("a", Relation::kIsA, "a", unit_model(1.0)).score - expected) < 1e-15);
  // all-OOV terms give u = tanh(b) = 0
  CHECK(bilinear_score("zzz", Relation::kIsA, "a", unit_model(5.0)).score == 0.5);
}

TEST_CASE("sigmoid stays inside the open interval") {
  for (double x : {-1e308, -800.0, -40.0, 0.0, 40.0, 800.0, 1e308}) {
    const double s = sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  CHECK(sigmoid(0) == 0.5);
}

TEST_CASE("fixture model matches an independent numpy evaluation") {
  const BilinearModel m = BilinearModel::load_file(fixture("bilinear.model").string());
  CHECK(m.embedding_dim() == 4);
  CHECK(m.hidden_dim() == 3);
  CHECK_FALSE(m.complete());
  CHECK(m.relation_matrix(Relation::kCreatedBy) == nullptr);
  struct Case {
    const char *head;
    Relation rel;
    const char *tail;
    double expected;
  };
  const Case cases[] = {
      {"bartender", Relation::kAtLocation, "bar", 0.9994774785137056},
      {"bartender", Relation::kCapableOf, "preparing and serving drinks", 0.9998297868137267},
      {"knife", Relation::kUsedFor, "cutting food", 0.7436842802475437},
      {"owl", Relation::kIsA, "bird of prey", 0.01811661202591129},
      {"glacier", Relation::kHasProperty, "unknownword", 0.42433257689688303},
  };
  for (const Case &c : cases) {
    CHECK(std::abs(bilinear_score(c.head, c.rel, c.tail, m).score - c.expected) < 1e-12);
  }
  CHECK_THROWS_AS(bilinear_score("bread", Relation::kCreatedBy, "baker", m), NotFoundError);
}

TEST_CASE("model save and load round-trip") {
  const BilinearModel m = BilinearModel::load_file(fixture("bilinear.model").string());
  std::ostringstream out;
  m.save(out);
  std::istringstream in(out.str());
  const BilinearModel again = BilinearModel::load(in);
  CHECK(again.transform() == m.transform());
  CHECK(again.bias() == m.bias());
  CHECK(bilinear_score("owl", Relation::kIsA, "bird", again).score ==
        bilinear_score("owl", Relation::kIsA, "bird", m).score);
}

TEST_CASE("model parse errors") {
  std::istringstream magic("not-a-model\n");
  CHECK_THROWS_AS(BilinearModel::load(magic), ParseError);
  std::istringstream truncated("cskm-bilinear 1\ndims 1 1\nrelations 1 IsA\nembeddings 1\na 1\n");
  CHECK_THROWS_AS(BilinearModel::load(truncated), InputError);
  std::istringstream bad_rel("cskm-bilinear 1\ndims 1 1\nrelations 1 Synonym\n");
  CHECK_THROWS_AS(BilinearModel::load(bad_rel), ParseError);
  CHECK_THROWS_AS(BilinearModel::load_file("/nonexistent.model"), InputError);
  BilinearModel m = unit_model(1.0);
  CHECK_THROWS_AS(m.set_relation_matrix(Relation::kIsA, Eigen::MatrixXd::Zero(2, 2)), ValidationError);
}

TEST_CASE("word order inside a term does not change the score") {
  const BilinearModel m = BilinearModel::load_file(fixture("bilinear.model").string());
  const double a = bilinear_score("bartender", Relation::kCapableOf, "preparing and serving drinks", m).score;
  const double b = bilinear_score("bartender", Relation::kCapableOf, "drinks serving and preparing", m).score;
  CHECK(a == b);
}

TEST_CASE("PMI averages both directions") {
  const PmiComponents c{-1.0, -3.0, -2.0, -2.5};
  CHECK(pmi_score(c) == (2.0 + 0.5) / 2);
  const PmiComponents swapped{-2.0, -2.5, -1.0, -3.0};
  CHECK(pmi_score(swapped) == pmi_score(c));
  CHECK_THROWS_AS(pmi_score({-INFINITY, 0, 0, 0}), ValidationError);
  CHECK_THROWS_AS(pmi_score({NAN, 0, 0, 0}), ValidationError);
}

TEST_CASE("external scores: calibrated range, malformed rows, PMI columns") {
  std::istringstream in(
      "# header\n"
      "bartender\tAtLocation\tbar\t0.87\n"
      "bartender\tSynonym\tbar\t0.5\n"
      "bartender\tIsA\tperson\t1.5\n"
      "bartender\tIsA\tperson\tx\n"
      "short\trow\n"
      "owl\tIsA\tbird\t1\n");
  const ScoreIngest s = ingest_external_scores(in, "kgbert", true);
  CHECK(s.stats.rows == 6);
  CHECK(s.stats.parsed == 2);
  CHECK(s.out_of_range == 1);
  CHECK(s.stats.unknown_relation == 1);
  CHECK(s.stats.malformed == 2);
  CHECK(s.records[0] == ScoreRecord{{"bartender", Relation::kAtLocation, "bar"}, "kgbert", 0.87});

  std::istringstream pmi("a\tIsA\tb\t-1\t-3\t-2\t-2.5\n");
  const ScoreIngest p = ingest_external_scores(pmi, "pmi", false);
  REQUIRE(p.records.size() == 1);
  CHECK(p.records[0].score == 1.25);
  std::istringstream unbounded("a\tIsA\tb\t7.5\n");
  CHECK(ingest_external_scores(unbounded, "pmi", false).records.size() == 1);
}

TEST_CASE("fixture score files ingest cleanly") {
  std::ifstream k(fixture("kgbert_scores.tsv"));
  const ScoreIngest a = ingest_external_scores(k, "kgbert", true);
  CHECK(a.stats.skipped == 0);
  CHECK(a.records.size() > 1000);
  std::ifstream p(fixture("pmi_components.tsv"));
  const ScoreIngest b = ingest_external_scores(p, "pmi", false);
  CHECK(b.stats.skipped == 0);
}

TEST_CASE("ranking is by score then head and tail, one relation, one scorer") {
  const auto recs = records({{"b", Relation::kIsA, 0.5},
                             {"a", Relation::kIsA, 0.5},
                             {"c", Relation::kIsA, 0.9},
                             {"d", Relation::kUsedFor, 1.0}});
  const auto ranked = rank_candidates(recs, Relation::kIsA);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].key.head == "c");
  CHECK(ranked[1].key.head == "a");
  CHECK(ranked[2].key.head == "b");
  auto mixed = recs;
  mixed[0].scorer_id = "other";
  CHECK_THROWS_AS(rank_candidates(mixed, Relation::kIsA), ValidationError);
  auto nan = recs;
  nan[1].score = NAN;
  CHECK_THROWS_AS(rank_candidates(nan, Relation::kIsA), ValidationError);
}

TEST_CASE("selection: inclusive threshold, top-N clamp, theta domain") {
  const auto ranked = rank_candidates(
      records({{"a", Relation::kIsA, 0.95}, {"b", Relation::kIsA, 0.9}, {"c", Relation::kIsA, 0.8999999}}),
      Relation::kIsA);
  CHECK(select_qualified(ranked, SelectionCriterion::threshold(0.9)).size() == 2);
  CHECK(select_qualified(ranked, SelectionCriterion::top(2)).size() == 2);
  CHECK(select_qualified(ranked, SelectionCriterion::top(1000)).size() == 3);
  CHECK(select_qualified(ranked, SelectionCriterion::top(0)).empty());
  CHECK_THROWS_AS(select_qualified(ranked, SelectionCriterion::threshold(1.5)), ValidationError);
  CHECK_THROWS_AS(SelectionCriterion::threshold(-0.1).validate(), ValidationError);
  CHECK_NOTHROW(SelectionCriterion::threshold(0.0).validate());
  CHECK_NOTHROW(SelectionCriterion::threshold(1.0).validate());
}

TEST_CASE("sampling: ascending distinct indices, clamped, seeded") {
  const auto a = sample_indices(100, 10, 7);
  CHECK(a.size() == 10);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 10);
  CHECK(a == sample_indices(100, 10, 7));
  CHECK(a != sample_indices(100, 10, 8));
  CHECK(sample_indices(5, 50, 1) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(sample_indices(0, 3, 1).empty());
  // Frozen from a separate mt19937_64 implementation; catches generator drift.
  CHECK(sample_indices(10, 3, 13) == std::vector<std::size_t>{1, 3, 5});
  CHECK(sample_indices(1000, 5, 42) == std::vector<std::size_t>{58, 249, 406, 897, 958});
}

TEST_CASE("negatives avoid positives and change one slot") {
  std::ifstream in(fixture("train.tsv"));
  const std::vector<Triple> pos = load_training_triples(in).items;
  const auto negs = generate_negative_triples(pos, 500, 99);
  CHECK(negs.size() == 500);
  std::set<std::tuple<std::string, Relation, std::string>> known;
  for (const Triple &t : pos) known.emplace(t.head_lower(), t.relation, t.tail_lower());
  for (const NegativeTriple &n : negs) {
    CHECK_FALSE(known.contains({n.triple.head_lower(), n.triple.relation, n.triple.tail_lower()}));
    const Triple &src = pos[n.source_index];
    CHECK(n.triple.relation == src.relation);
    if (n.replaced == Slot::kHead) {
      CHECK(n.triple.tail == src.tail);
      CHECK(n.triple.head_lower() != src.head_lower());
    } else {
      CHECK(n.triple.head == src.head);
      CHECK(n.triple.tail_lower() != src.tail_lower());
    }
    CHECK(n.triple.confidence == 0.0);
  }
  std::ostringstream a, b;
  write_negatives_tsv(a, negs);
  write_negatives_tsv(b, generate_negative_triples(pos, 500, 99));
  CHECK(a.str() == b.str());
}

TEST_CASE("negative sampling error paths") {
  const std::vector<Triple> one = {{"a", Relation::kIsA, "a", "x", std::nullopt}};
  CHECK_THROWS_AS(generate_negative_triples(one, 1, 1), ValidationError);
  // every corruption of this pair is itself positive
  const std::vector<Triple> closed = {{"a", Relation::kIsA, "b", "x", std::nullopt},
                                      {"b", Relation::kIsA, "a", "x", std::nullopt},
                                      {"a", Relation::kIsA, "a", "x", std::nullopt},
                                      {"b", Relation::kIsA, "b", "x", std::nullopt}};
  CHECK_THROWS_AS(generate_negative_triples(closed, 1, 1, 50), Error);
}

}  // TEST_SUITE
