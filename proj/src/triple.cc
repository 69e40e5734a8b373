#include "cskm/triple.h"

#include "cskm/text.h"

namespace cskm {

namespace {

constexpr std::array<std::string_view, kRelationCount> kRelationNames = {
    "AtLocation",  "CapableOf",      "Causes",  "CreatedBy",
    "Desires",     "HasProperty",    "HasSubevent", "IsA",
    "MadeOf",      "PartOf",         "ReceivesAction", "UsedFor",
};

}  // namespace

std::string_view relation_name(Relation r) {
  return kRelationNames[relation_index(r)];
}

std::optional<Relation> parse_relation(std::string_view label) {
  for (Relation r : kAllRelations) {
    if (relation_name(r) == label) return r;
  }
  return std::nullopt;
}

Relation relation_from_string(std::string_view label) {
  auto r = parse_relation(label);
  if (!r) throw UnknownRelationError(std::string(label));
  return *r;
}

std::string Triple::head_lower() const { return to_lower(head); }
std::string Triple::tail_lower() const { return to_lower(tail); }

}  // namespace cskm
