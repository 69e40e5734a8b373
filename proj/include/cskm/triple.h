#ifndef CSKM_TRIPLE_H_
#define CSKM_TRIPLE_H_

#include <array>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "cskm/error.h"

namespace cskm {

// The twelve target relations, in the order used for every report.
enum class Relation {
  kAtLocation,
  kCapableOf,
  kCauses,
  kCreatedBy,
  kDesires,
  kHasProperty,
  kHasSubevent,
  kIsA,
  kMadeOf,
  kPartOf,
  kReceivesAction,
  kUsedFor,
};

inline constexpr std::size_t kRelationCount = 12;

inline constexpr std::array<Relation, kRelationCount> kAllRelations = {
    Relation::kAtLocation,  Relation::kCapableOf,      Relation::kCauses,
    Relation::kCreatedBy,   Relation::kDesires,        Relation::kHasProperty,
    Relation::kHasSubevent, Relation::kIsA,            Relation::kMadeOf,
    Relation::kPartOf,      Relation::kReceivesAction, Relation::kUsedFor,
};

std::string_view relation_name(Relation r);

// Exact, case-sensitive match against the relation labels.
std::optional<Relation> parse_relation(std::string_view label);

class UnknownRelationError : public ValidationError {
 public:
  explicit UnknownRelationError(std::string label)
      : ValidationError("unknown relation '" + label + "'"),
        label_(std::move(label)) {}

  const std::string &label() const { return label_; }

 private:
  std::string label_;
};

// Like parse_relation but throws UnknownRelationError.
Relation relation_from_string(std::string_view label);

inline std::size_t relation_index(Relation r) {
  return static_cast<std::size_t>(r);
}

// Identity of a triple across scorers, novelty checks and annotation.
struct TripleKey {
  std::string head;
  Relation relation = Relation::kAtLocation;
  std::string tail;

  auto operator<=>(const TripleKey &) const = default;
  bool operator==(const TripleKey &) const = default;
};

struct TripleKeyHash {
  std::size_t operator()(const TripleKey &k) const {
    std::size_t h = std::hash<std::string>()(k.head);
    h = h * 31 + relation_index(k.relation);
    h = h * 1000003 ^ std::hash<std::string>()(k.tail);
    return h;
  }
};

// An assertion from a reference graph or training set.
struct Triple {
  std::string head;
  Relation relation = Relation::kAtLocation;
  std::string tail;
  // Dump name and line number, e.g. "conceptnet.csv:17".
  std::string source;
  // Present for training-set rows.
  std::optional<double> confidence;

  std::string head_lower() const;
  std::string tail_lower() const;
  TripleKey key() const { return {head, relation, tail}; }

  bool operator==(const Triple &) const = default;
};

}  // namespace cskm

#endif  // CSKM_TRIPLE_H_
