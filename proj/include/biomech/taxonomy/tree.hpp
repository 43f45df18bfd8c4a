#pragma once

#include "biomech/core/record.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace biomech::taxonomy {

/// A node is identified by its path from the root, so the same genus name
/// reported under two families yields two nodes.
struct TreeNode {
  std::optional<Rank> rank;  // nullopt for the root
  std::string name;
  const TreeNode* parent = nullptr;
  std::map<std::string, std::unique_ptr<TreeNode>> children;
  std::vector<std::string> organisms;  // genus nodes only; distinct, sorted

  /// Distinct children; for a genus, the organisms attached to it.
  std::size_t child_count() const;
  /// Every node and organism below this one.
  std::size_t subtree_size() const;
  /// Child names, or organism names for a genus, in sorted order.
  std::vector<std::string> child_names() const;
  /// "eukarya/animalia/..." from the domain down to this node.
  std::string path() const;
};

enum class SortKey : std::uint8_t { immediate_children, subtree_size };

std::string_view sort_key_name(SortKey key);
std::optional<SortKey> parse_sort_key(std::string_view name);

class TaxonomicTree {
 public:
  /// Records without a taxonomy are skipped and counted.
  static TaxonomicTree build(std::span<const MechanismRecord> records);

  const TreeNode& root() const { return *root_; }
  /// Nodes at `rank` in path order.
  std::vector<const TreeNode*> nodes_at(Rank rank) const;
  std::size_t skipped_records() const { return skipped_; }
  std::size_t organism_count() const;

 private:
  std::unique_ptr<TreeNode> root_ = std::make_unique<TreeNode>();
  std::size_t skipped_ = 0;
};

/// Nodes at `rank`, least populated first. Ties break alphabetically by name,
/// then by path.
std::vector<const TreeNode*> cut_and_rank(const TaxonomicTree& tree, Rank rank,
                                          SortKey key = SortKey::immediate_children);

/// Up to `n` names of the most populated nodes at `rank`, most populated first,
/// ties alphabetical. Names repeated across paths appear once.
std::vector<std::string> most_populated(const TaxonomicTree& tree, Rank rank, std::size_t n,
                                        SortKey key = SortKey::immediate_children);

/// Up to `n` child names drawn without replacement (partial Fisher-Yates over
/// the sorted child names, seeded).
std::vector<std::string> sample_children(const TreeNode& node, std::size_t n, std::uint64_t seed);

}  // namespace biomech::taxonomy
