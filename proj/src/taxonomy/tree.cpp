#include "biomech/taxonomy/tree.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace biomech::taxonomy {

std::size_t TreeNode::child_count() const {
  return rank == Rank::genus ? organisms.size() : children.size();
}

std::size_t TreeNode::subtree_size() const {
  std::size_t total = organisms.size();
  for (const auto& [_, child] : children) total += 1 + child->subtree_size();
  return total;
}

std::vector<std::string> TreeNode::child_names() const {
  if (rank == Rank::genus) return organisms;
  std::vector<std::string> out;
  out.reserve(children.size());
  for (const auto& [name, _] : children) out.push_back(name);
  return out;
}

std::string TreeNode::path() const {
  if (!rank) return {};
  const std::string up = parent == nullptr ? std::string() : parent->path();
  return up.empty() ? name : up + "/" + name;
}

std::string_view sort_key_name(SortKey key) {
  return key == SortKey::immediate_children ? "immediate-children" : "subtree-size";
}

std::optional<SortKey> parse_sort_key(std::string_view name) {
  if (name == "immediate-children") return SortKey::immediate_children;
  if (name == "subtree-size") return SortKey::subtree_size;
  return std::nullopt;
}

TaxonomicTree TaxonomicTree::build(std::span<const MechanismRecord> records) {
  TaxonomicTree tree;
  for (const auto& r : records) {
    if (!r.taxonomy || !r.taxonomy->complete()) {
      ++tree.skipped_;
      continue;
    }
    TreeNode* node = tree.root_.get();
    for (Rank rank : kAllRanks) {
      const auto& name = r.taxonomy->at(rank);
      auto& slot = node->children[name];
      if (!slot) {
        slot = std::make_unique<TreeNode>();
        slot->rank = rank;
        slot->name = name;
        slot->parent = node;
      }
      node = slot.get();
    }
    const auto& org = r.organism.name();
    auto pos = std::lower_bound(node->organisms.begin(), node->organisms.end(), org);
    if (pos == node->organisms.end() || *pos != org) node->organisms.insert(pos, org);
  }
  return tree;
}

std::vector<const TreeNode*> TaxonomicTree::nodes_at(Rank rank) const {
  std::vector<const TreeNode*> level{root_.get()};
  for (Rank r : kAllRanks) {
    std::vector<const TreeNode*> next;
    for (const TreeNode* n : level) {
      for (const auto& [_, child] : n->children) next.push_back(child.get());
    }
    level = std::move(next);
    if (r == rank) break;
  }
  return level;
}

std::size_t TaxonomicTree::organism_count() const {
  std::set<std::string> names;
  for (const TreeNode* g : nodes_at(Rank::genus)) names.insert(g->organisms.begin(), g->organisms.end());
  return names.size();
}

namespace {

std::size_t weight(const TreeNode& n, SortKey key) {
  return key == SortKey::immediate_children ? n.child_count() : n.subtree_size();
}

}  // namespace

std::vector<const TreeNode*> cut_and_rank(const TaxonomicTree& tree, Rank rank, SortKey key) {
  auto nodes = tree.nodes_at(rank);
  std::vector<std::pair<std::string, const TreeNode*>> keyed;
  keyed.reserve(nodes.size());
  for (const TreeNode* n : nodes) keyed.emplace_back(n->path(), n);
  std::stable_sort(keyed.begin(), keyed.end(), [key](const auto& a, const auto& b) {
    const auto wa = weight(*a.second, key);
    const auto wb = weight(*b.second, key);
    if (wa != wb) return wa < wb;
    if (a.second->name != b.second->name) return a.second->name < b.second->name;
    return a.first < b.first;
  });
  std::vector<const TreeNode*> out;
  out.reserve(keyed.size());
  for (const auto& [_, n] : keyed) out.push_back(n);
  return out;
}

std::vector<std::string> most_populated(const TaxonomicTree& tree, Rank rank, std::size_t n, SortKey key) {
  auto nodes = tree.nodes_at(rank);
  std::stable_sort(nodes.begin(), nodes.end(), [key](const TreeNode* a, const TreeNode* b) {
    const auto wa = weight(*a, key);
    const auto wb = weight(*b, key);
    if (wa != wb) return wa > wb;
    return a->name < b->name;
  });
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const TreeNode* node : nodes) {
    if (out.size() >= n) break;
    if (seen.insert(node->name).second) out.push_back(node->name);
  }
  return out;
}

std::vector<std::string> sample_children(const TreeNode& node, std::size_t n, std::uint64_t seed) {
  auto names = node.child_names();
  const std::size_t take = std::min(n, names.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (names.size() - i));
    std::swap(names[i], names[j]);
  }
  names.resize(take);
  return names;
}

}  // namespace biomech::taxonomy
