#include "ihcube/rtree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "ihcube/error.hpp"

namespace ihcube {

namespace {

struct Growth {
  double objective;
  double margin;
  double area;
};

Growth growth(const Rect& box, const Rect& add, std::span<const double> scale) {
  Rect grown = box;
  grown.expand(add);
  double area = box.volume(scale);
  return {insertion_objective(area, grown.volume(scale)),
          grown.margin(scale) - box.margin(scale), area};
}

std::size_t choose_for(std::span<const Rect> entries, const Rect& add,
                       std::span<const double> scale) {
  std::size_t best = 0;
  Growth best_g{};
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Growth g = growth(entries[i], add, scale);
    if (i == 0 || g.objective < best_g.objective ||
        (g.objective == best_g.objective &&
         (g.margin < best_g.margin ||
          (g.margin == best_g.margin && g.area < best_g.area)))) {
      best = i;
      best_g = g;
    }
  }
  return best;
}

std::vector<double> center(const Rect& r) {
  std::vector<double> c(r.dims());
  for (std::size_t d = 0; d < r.dims(); ++d) c[d] = 0.5 * (r[d].lo + r[d].hi);
  return c;
}

}  // namespace

std::uint32_t RTreeConfig::min_fill() const {
  if (m_min != 0) return m_min;
  return static_cast<std::uint32_t>(std::ceil(0.4 * m_max));
}

void RTreeConfig::validate() const {
  if (m_max < 4) throw ValidationError("build.m_max", "must be at least 4");
  if (min_fill() < 1 || min_fill() > m_max / 2) {
    throw ValidationError("build.m_min", "must lie in [1, m_max / 2]");
  }
  if (!(reinsert_fraction >= 0.0 && reinsert_fraction < 1.0)) {
    throw ValidationError("build.reinsert_fraction", "must lie in [0, 1)");
  }
}

std::vector<double> scale_factors(std::span<const DimensionSpec> axes) {
  std::vector<double> s;
  s.reserve(axes.size());
  for (const auto& a : axes) s.push_back(a.scale_count / a.width());
  return s;
}

double insertion_objective(double area, double area_new) {
  if (area <= 0.0) return area_new;
  return (area_new / area) * (area_new - area);
}

std::size_t choose_subtree(std::span<const Rect> entries,
                           std::span<const double> p,
                           std::span<const double> scale) {
  return choose_for(entries, Rect::point(p), scale);
}

Tree::Tree(std::vector<TreeNode> nodes, std::uint32_t root)
    : nodes_(std::move(nodes)), root_(root) {
  for (const auto& n : nodes_) {
    if (n.is_leaf()) leaves_.push_back(n.id);
  }
  std::sort(leaves_.begin(), leaves_.end(), [&](auto a, auto b) {
    return nodes_[a].leaf_index < nodes_[b].leaf_index;
  });
  for (std::size_t i = 0; i < leaves_.size(); ++i) {
    if (nodes_[leaves_[i]].leaf_index != i) {
      throw FormatError("leaf indices are not contiguous");
    }
  }
}

std::uint32_t Tree::height() const {
  return empty() ? 0 : nodes_[root_].level + 1;
}

std::vector<std::uint32_t> Tree::intersecting(const Rect& r,
                                              std::uint32_t level) const {
  std::vector<std::uint32_t> out;
  if (empty()) return out;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    const auto& n = nodes_[id];
    if (!n.mbr.intersects(r)) continue;
    if (n.level == level) {
      out.push_back(id);
    } else if (n.level > level) {
      for (auto c : n.children) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> Tree::containing_leaves(
    std::span<const double> p) const {
  std::vector<std::uint32_t> out;
  if (empty()) return out;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    const auto& n = nodes_[id];
    if (!n.mbr.contains(p)) continue;
    if (n.is_leaf()) {
      out.push_back(id);
    } else {
      for (auto c : n.children) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> Tree::leaves_below(std::uint32_t id) const {
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> stack{id};
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    if (nodes_[n].is_leaf()) {
      out.push_back(nodes_[n].leaf_index);
    } else {
      for (auto c : nodes_[n].children) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Tree::expand_leaf(std::uint32_t leaf_id, std::span<const double> p) {
  for (auto id = leaf_id; id != kNoNode; id = nodes_[id].parent) {
    if (nodes_[id].mbr.contains(p)) break;
    nodes_[id].mbr.expand(p);
  }
}

void Tree::add_count(std::uint32_t leaf_id, std::uint64_t n) {
  for (auto id = leaf_id; id != kNoNode; id = nodes_[id].parent) {
    nodes_[id].count += n;
  }
}

void Tree::set_leaf_mbr(std::uint32_t leaf_id, const Rect& r) {
  nodes_[leaf_id].mbr = r;
  for (auto id = nodes_[leaf_id].parent; id != kNoNode; id = nodes_[id].parent) {
    nodes_[id].mbr.expand(r);
  }
}

RTreeBuilder::RTreeBuilder(std::vector<DimensionSpec> axes, RTreeConfig cfg)
    : axes_(std::move(axes)), scale_(scale_factors(axes_)), cfg_(cfg) {
  cfg_.validate();
}

std::uint32_t RTreeBuilder::height() const {
  return root_ == kNoNode ? 0 : nodes_[root_].level + 1;
}

std::uint32_t RTreeBuilder::new_node(std::uint32_t level) {
  Node n;
  n.level = level;
  n.mbr = Rect::empty(axes_.size());
  nodes_.push_back(std::move(n));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void RTreeBuilder::insert(std::span<const double> p) {
  if (p.size() != axes_.size()) {
    throw ValidationError("", "point dimensionality does not match the tree");
  }
  if (root_ == kNoNode) root_ = new_node(0);
  reinserted_.assign(height(), false);
  insert_entry({Rect::point(p), kNoNode}, 0);
  ++size_;
}

std::uint32_t RTreeBuilder::choose_node(const Rect& box,
                                        std::uint32_t level) const {
  std::uint32_t n = root_;
  std::vector<Rect> boxes;
  while (nodes_[n].level > level) {
    const auto& entries = nodes_[n].entries;
    boxes.clear();
    for (const auto& e : entries) boxes.push_back(e.box);
    n = entries[choose_for(boxes, box, scale_)].child;
  }
  return n;
}

void RTreeBuilder::insert_entry(Entry e, std::uint32_t level) {
  const std::uint32_t n = choose_node(e.box, level);
  if (e.child != kNoNode) nodes_[e.child].parent = n;
  nodes_[n].entries.push_back(std::move(e));
  adjust_upward(n);
  if (nodes_[n].entries.size() > cfg_.m_max) overflow(n);
}

void RTreeBuilder::recompute_mbr(std::uint32_t node) {
  auto& n = nodes_[node];
  n.mbr = Rect::empty(axes_.size());
  for (const auto& e : n.entries) n.mbr.expand(e.box);
}

void RTreeBuilder::adjust_upward(std::uint32_t node) {
  for (auto id = node; id != kNoNode; id = nodes_[id].parent) {
    recompute_mbr(id);
    auto parent = nodes_[id].parent;
    if (parent == kNoNode) break;
    for (auto& e : nodes_[parent].entries) {
      if (e.child == id) {
        e.box = nodes_[id].mbr;
        break;
      }
    }
  }
}

void RTreeBuilder::overflow(std::uint32_t node) {
  const auto level = nodes_[node].level;
  if (reinserted_.size() <= level) reinserted_.resize(level + 1, false);
  if (node != root_ && !reinserted_[level] && cfg_.reinsert_fraction > 0.0) {
    reinserted_[level] = true;
    reinsert(node);
  } else {
    split(node);
  }
}

void RTreeBuilder::reinsert(std::uint32_t node) {
  auto& entries = nodes_[node].entries;
  const auto c = center(nodes_[node].mbr);
  auto dist = [&](const Entry& e) {
    auto ec = center(e.box);
    double s = 0.0;
    for (std::size_t d = 0; d < ec.size(); ++d) {
      double v = (ec[d] - c[d]) * scale_[d];
      s += v * v;
    }
    return s;
  };
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    order.emplace_back(dist(entries[i]), i);
  }
  // Farthest first; stable on index for determinism.
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  auto p = static_cast<std::size_t>(
      std::lround(cfg_.reinsert_fraction * static_cast<double>(entries.size())));
  p = std::clamp<std::size_t>(p, 1, entries.size() - cfg_.min_fill());

  std::vector<char> removed(entries.size(), 0);
  std::vector<Entry> out;
  for (std::size_t i = 0; i < p; ++i) removed[order[i].second] = 1;
  // Reinsert nearest of the removed first.
  for (std::size_t i = p; i-- > 0;) out.push_back(entries[order[i].second]);
  std::vector<Entry> keep;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!removed[i]) keep.push_back(std::move(entries[i]));
  }
  entries = std::move(keep);
  adjust_upward(node);
  const auto level = nodes_[node].level;
  for (auto& e : out) insert_entry(std::move(e), level);
}

void RTreeBuilder::split(std::uint32_t node) {
  const std::size_t total = nodes_[node].entries.size();
  const std::size_t m = cfg_.min_fill();
  const std::size_t dims = axes_.size();

  struct Candidate {
    std::vector<std::size_t> order;
    std::size_t k;
  };
  auto sorted_order = [&](std::size_t axis, bool by_hi) {
    const auto& entries = nodes_[node].entries;
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      const auto& ia = entries[a].box[axis];
      const auto& ib = entries[b].box[axis];
      if (by_hi) return ia.hi != ib.hi ? ia.hi < ib.hi : ia.lo < ib.lo;
      return ia.lo != ib.lo ? ia.lo < ib.lo : ia.hi < ib.hi;
    });
    return order;
  };
  // Bounding boxes of every prefix and suffix of an ordering.
  auto prefix_suffix = [&](const std::vector<std::size_t>& order,
                           std::vector<Rect>& pre, std::vector<Rect>& suf) {
    const auto& entries = nodes_[node].entries;
    pre.assign(total + 1, Rect::empty(dims));
    suf.assign(total + 1, Rect::empty(dims));
    for (std::size_t i = 0; i < total; ++i) {
      pre[i + 1] = pre[i];
      pre[i + 1].expand(entries[order[i]].box);
    }
    for (std::size_t i = total; i-- > 0;) {
      suf[i] = suf[i + 1];
      suf[i].expand(entries[order[i]].box);
    }
  };

  std::size_t best_axis = 0;
  double best_margin = 0.0;
  std::vector<Rect> pre, suf;
  for (std::size_t axis = 0; axis < dims; ++axis) {
    double s = 0.0;
    for (bool by_hi : {false, true}) {
      auto order = sorted_order(axis, by_hi);
      prefix_suffix(order, pre, suf);
      for (std::size_t k = m; k <= total - m; ++k) {
        s += pre[k].margin(scale_) + suf[k].margin(scale_);
      }
    }
    if (axis == 0 || s < best_margin) {
      best_axis = axis;
      best_margin = s;
    }
  }

  Candidate best{{}, 0};
  double best_overlap = 0.0, best_area = 0.0;
  bool have = false;
  for (bool by_hi : {false, true}) {
    auto order = sorted_order(best_axis, by_hi);
    prefix_suffix(order, pre, suf);
    for (std::size_t k = m; k <= total - m; ++k) {
      double ov = pre[k].overlap(suf[k], scale_);
      double ar = pre[k].volume(scale_) + suf[k].volume(scale_);
      if (!have || ov < best_overlap || (ov == best_overlap && ar < best_area)) {
        best = {order, k};
        best_overlap = ov;
        best_area = ar;
        have = true;
      }
    }
  }

  const auto level = nodes_[node].level;
  const std::uint32_t sibling = new_node(level);
  {
    auto entries = std::move(nodes_[node].entries);
    nodes_[node].entries.clear();
    for (std::size_t i = 0; i < total; ++i) {
      auto& e = entries[best.order[i]];
      std::uint32_t target = i < best.k ? node : sibling;
      if (e.child != kNoNode) nodes_[e.child].parent = target;
      nodes_[target].entries.push_back(std::move(e));
    }
  }
  recompute_mbr(node);
  recompute_mbr(sibling);

  if (node == root_) {
    const std::uint32_t r = new_node(level + 1);
    nodes_[r].entries.push_back({nodes_[node].mbr, node});
    nodes_[r].entries.push_back({nodes_[sibling].mbr, sibling});
    nodes_[node].parent = r;
    nodes_[sibling].parent = r;
    recompute_mbr(r);
    root_ = r;
    return;
  }
  const auto parent = nodes_[node].parent;
  nodes_[sibling].parent = parent;
  nodes_[parent].entries.push_back({nodes_[sibling].mbr, sibling});
  adjust_upward(node);
  if (nodes_[parent].entries.size() > cfg_.m_max) overflow(parent);
}

Tree RTreeBuilder::freeze() const {
  if (root_ == kNoNode) return {};
  std::vector<TreeNode> out;
  std::vector<std::uint32_t> old_ids;
  std::deque<std::pair<std::uint32_t, std::uint32_t>> queue{{root_, kNoNode}};
  std::uint32_t leaves = 0;
  while (!queue.empty()) {
    auto [old, parent] = queue.front();
    queue.pop_front();
    const auto& n = nodes_[old];
    TreeNode t;
    t.id = static_cast<std::uint32_t>(out.size());
    t.level = n.level;
    t.parent = parent;
    t.mbr = n.mbr;
    if (n.level == 0) {
      t.leaf_index = leaves++;
      t.count = n.entries.size();
    }
    out.push_back(std::move(t));
    old_ids.push_back(old);
    for (const auto& e : n.entries) {
      if (e.child != kNoNode) queue.emplace_back(e.child, out.back().id);
    }
  }
  // Children ids follow from BFS order: each child recorded its parent.
  for (auto& t : out) {
    if (t.parent != kNoNode) out[t.parent].children.push_back(t.id);
  }
  for (std::size_t i = out.size(); i-- > 0;) {
    if (out[i].parent != kNoNode) out[out[i].parent].count += out[i].count;
  }
  return Tree(std::move(out), 0);
}

std::string RTreeBuilder::check() const {
  if (root_ == kNoNode) return size_ == 0 ? "" : "missing root";
  std::size_t points = 0;
  std::vector<std::uint32_t> stack{root_};
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    const auto& n = nodes_[id];
    if (id != root_ &&
        (n.entries.size() < cfg_.min_fill() || n.entries.size() > cfg_.m_max)) {
      return "fan-out out of range at node " + std::to_string(id);
    }
    if (id == root_ && n.level > 0 && n.entries.size() < 2) {
      return "internal root with a single entry";
    }
    Rect b = Rect::empty(axes_.size());
    for (const auto& e : n.entries) {
      b.expand(e.box);
      if (e.child == kNoNode) {
        if (n.level != 0) return "point entry above leaf level";
        ++points;
      } else {
        const auto& c = nodes_[e.child];
        if (c.level + 1 != n.level) return "unbalanced levels";
        if (c.parent != id) return "stale parent link";
        if (!(c.mbr == e.box)) return "entry box differs from child MBR";
        stack.push_back(e.child);
      }
    }
    if (!(b == n.mbr)) return "MBR is not the bound of its entries";
  }
  if (points != size_) return "point count mismatch";
  return "";
}

}  // namespace ihcube
