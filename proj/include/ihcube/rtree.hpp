#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ihcube/geometry.hpp"
#include "ihcube/schema.hpp"

namespace ihcube {

inline constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

struct RTreeConfig {
  std::uint32_t m_max = 64;
  /// 0 selects ceil(0.4 * m_max).
  std::uint32_t m_min = 0;
  double reinsert_fraction = 0.3;

  std::uint32_t min_fill() const;
  void validate() const;
};

/// Per-axis multipliers that turn value lengths into scale units, so areas
/// of differently scaled dimensions are comparable.
std::vector<double> scale_factors(std::span<const DimensionSpec> axes);

/// (area_new / area) * (area_new - area); area_new alone when area is 0.
double insertion_objective(double area, double area_new);

/// Index of the entry whose rectangle is cheapest to grow around `p`. Ties go
/// to the smaller margin growth, then the smaller area, then the lower index
/// (entries are kept in id order).
std::size_t choose_subtree(std::span<const Rect> entries,
                           std::span<const double> p,
                           std::span<const double> scale);

/// Node of a frozen tree. Leaves are level 0; all leaves share one depth.
struct TreeNode {
  std::uint32_t id = 0;
  std::uint32_t level = 0;
  std::uint32_t parent = kNoNode;
  Rect mbr;
  std::vector<std::uint32_t> children;  // node ids, empty for leaves
  std::uint32_t leaf_index = kNoNode;   // position among leaves
  std::uint64_t count = 0;              // points routed below this node

  bool is_leaf() const { return level == 0; }
};

/// Frozen tree topology: no splits, MBRs may still grow.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<TreeNode> nodes, std::uint32_t root);

  bool empty() const { return nodes_.empty(); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::uint32_t id) const { return nodes_[id]; }
  std::uint32_t root() const { return root_; }
  /// Number of levels (1 for a lone leaf, 0 when empty).
  std::uint32_t height() const;
  /// Node ids of leaves in leaf-index order.
  const std::vector<std::uint32_t>& leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }

  /// Node ids at `level` whose MBR intersects `r` (closed test), ascending.
  std::vector<std::uint32_t> intersecting(const Rect& r,
                                          std::uint32_t level = 0) const;
  /// Leaf ids whose MBR contains `p`, ascending.
  std::vector<std::uint32_t> containing_leaves(std::span<const double> p) const;
  /// Leaf indices below node `id`.
  std::vector<std::uint32_t> leaves_below(std::uint32_t id) const;

  /// Grows a leaf MBR to contain `p` and propagates to the root.
  void expand_leaf(std::uint32_t leaf_id, std::span<const double> p);
  void add_count(std::uint32_t leaf_id, std::uint64_t n);
  void set_leaf_mbr(std::uint32_t leaf_id, const Rect& r);

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> leaves_;
  std::uint32_t root_ = kNoNode;
};

/// R*-tree over points with the density-weighted subtree choice, forced
/// reinsertion and the overlap-minimizing split.
class RTreeBuilder {
 public:
  RTreeBuilder(std::vector<DimensionSpec> axes, RTreeConfig cfg = {});

  void insert(std::span<const double> p);
  std::size_t size() const { return size_; }
  /// Current number of levels (0 when empty).
  std::uint32_t height() const;

  /// Snapshot with node ids renumbered breadth-first from the root and leaf
  /// point counts filled in.
  Tree freeze() const;

  /// Structural checks used by tests: balanced leaves, fan-out limits,
  /// MBR containment. Returns an empty string when everything holds.
  std::string check() const;

 private:
  struct Entry {
    Rect box;
    std::uint32_t child = kNoNode;  // kNoNode for point entries
  };
  struct Node {
    std::uint32_t level = 0;
    std::uint32_t parent = kNoNode;
    Rect mbr;
    std::vector<Entry> entries;
  };

  void insert_entry(Entry e, std::uint32_t level);
  std::uint32_t choose_node(const Rect& box, std::uint32_t level) const;
  void overflow(std::uint32_t node);
  void reinsert(std::uint32_t node);
  void split(std::uint32_t node);
  void recompute_mbr(std::uint32_t node);
  void adjust_upward(std::uint32_t node);
  std::uint32_t new_node(std::uint32_t level);

  std::vector<DimensionSpec> axes_;
  std::vector<double> scale_;
  RTreeConfig cfg_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = kNoNode;
  std::size_t size_ = 0;
  std::vector<bool> reinserted_;  // per level, reset for each insert()
};

}  // namespace ihcube
