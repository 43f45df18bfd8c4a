#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::llm {

struct MechanismPair {
  std::string mechanism;
  std::string organism;

  bool operator==(const MechanismPair&) const = default;
};

struct StructuredList {
  std::vector<MechanismPair> pairs;
  std::size_t dropped = 0;  // entries missing a key or with non-string values
};

/// Tolerant parse of a structure-output reply: a JSON array of
/// {"mechanism", "organism"} objects, possibly inside a ``` fence or prose.
/// Throws ReplyParseError (carrying `raw`) when no entry survives.
StructuredList parse_structured_list(std::string_view raw);

std::string serialize_structured_list(const std::vector<MechanismPair>& pairs);

}  // namespace biomech::llm
