#include "ihcube/partitioner.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>

#include "ihcube/error.hpp"
#include "ihcube/store.hpp"

namespace ihcube {

namespace {

// Bernoulli sampling decisions, replayable across scans.
class Sampler {
 public:
  Sampler(double p, std::uint64_t seed) : p_(p), seed_(seed), rng_(seed) {}
  void reset() { rng_.seed(seed_); }
  bool take() {
    if (p_ >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p_;
  }

 private:
  double p_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

void check_point(const Schema& schema, const std::vector<DimensionSpec>& axes,
                 const DataPoint& p) {
  if (p.coordinates.size() != axes.size() ||
      p.measures.size() != schema.measure_count()) {
    throw ConstructionError("point arity does not match the schema");
  }
  for (std::size_t d = 0; d < axes.size(); ++d) {
    if (!axes[d].contains(p.coordinates[d])) {
      throw ConstructionError("coordinate outside the domain of '" +
                              axes[d].name + "'");
    }
  }
}

// Leaf with the least insertion objective for a point no leaf contains.
std::uint32_t nearest_leaf(const Tree& tree, std::span<const double> scale,
                           std::span<const double> p) {
  std::vector<Rect> boxes;
  boxes.reserve(tree.leaf_count());
  for (auto id : tree.leaves()) boxes.push_back(tree.node(id).mbr);
  return tree.leaves()[choose_subtree(boxes, p, scale)];
}

}  // namespace

void BuildConfig::validate(const Schema& schema) const {
  tree.validate();
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw ValidationError("build.sample_rate", "must lie in (0, 1]");
  }
  if (layout.sum_slots != schema.measure_count()) {
    throw ValidationError("descriptor", "sum slots must match measure count");
  }
  if (layout.kind == DescriptorKind::histogram &&
      (layout.histogram_bins == 0 ||
       layout.histogram_measure >= schema.measure_count())) {
    throw ValidationError("descriptor", "histogram needs bins and a measure");
  }
}

std::uint32_t assign_leaf(const Tree& tree, std::span<const double> scale,
                          std::span<const double> p) {
  auto leaves = tree.containing_leaves(p);
  if (leaves.empty()) return kNoNode;
  std::uint32_t best = leaves.front();
  double best_area = tree.node(best).mbr.volume(scale);
  for (std::size_t i = 1; i < leaves.size(); ++i) {
    double a = tree.node(leaves[i]).mbr.volume(scale);
    if (a < best_area) {
      best = leaves[i];
      best_area = a;
    }
  }
  return best;
}

Index build_index(const Schema& schema, const PointSource& source,
                  const BuildConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate(schema);
  Index index;
  index.schema = schema;
  index.layout = cfg.layout;
  index.axes = schema.index_axes();
  const auto& axes = index.axes;
  const auto scale = scale_factors(axes);

  std::uint64_t rows = 0;
  if (auto n = source.size()) {
    rows = *n;
  } else {
    source.scan([&](const DataPoint&) { ++rows; });
  }
  double p = cfg.sample_rate;
  if (cfg.max_sample > 0 && rows > 0) {
    p = std::min(p, static_cast<double>(cfg.max_sample) / static_cast<double>(rows));
  }

  // Phase 1: exact insertion of the sample.
  Sampler sampler(p, cfg.seed);
  RTreeBuilder builder(axes, cfg.tree);
  source.scan([&](const DataPoint& pt) {
    check_point(schema, axes, pt);
    if (sampler.take()) builder.insert(pt.coordinates);
  });
  index.stats.skeleton_points = builder.size();
  Tree tree = builder.freeze();
  if (tree.empty() && rows > 0) {
    // A sample can come out empty on tiny inputs; seed with the first row.
    RTreeBuilder one(axes, cfg.tree);
    bool done = false;
    source.scan([&](const DataPoint& pt) {
      if (!done) one.insert(pt.coordinates);
      done = true;
    });
    tree = one.freeze();
    index.stats.skeleton_points = 1;
  }

  if (!tree.empty()) {
    // Phase 2: route the rest without splits; grow the nearest leaf when no
    // leaf contains the point.
    if (index.stats.skeleton_points < rows) {
      source.scan([&](const DataPoint& pt) {
        if (!tree.containing_leaves(pt.coordinates).empty()) return;
        tree.expand_leaf(nearest_leaf(tree, scale, pt.coordinates),
                         pt.coordinates);
      });
    }

    // Counts restart: the accumulation pass below assigns every row once.
    std::vector<TreeNode> nodes = tree.nodes();
    for (auto& n : nodes) n.count = 0;
    tree = Tree(std::move(nodes), tree.root());

    const std::size_t leaves = tree.leaf_count();
    std::vector<LocalBinning> binning(leaves);
    if (cfg.layout.kind == DescriptorKind::histogram) {
      std::vector<double> lo(leaves, std::numeric_limits<double>::infinity());
      std::vector<double> hi(leaves, -std::numeric_limits<double>::infinity());
      source.scan([&](const DataPoint& pt) {
        auto leaf = tree.node(assign_leaf(tree, scale, pt.coordinates)).leaf_index;
        double v = pt.measures[cfg.layout.histogram_measure];
        lo[leaf] = std::min(lo[leaf], v);
        hi[leaf] = std::max(hi[leaf], v);
      });
      for (std::size_t i = 0; i < leaves; ++i) {
        if (lo[i] <= hi[i]) binning[i] = {lo[i], hi[i], cfg.layout.histogram_bins};
      }
    }

    index.ihs.reserve(leaves);
    for (std::size_t i = 0; i < leaves; ++i) {
      const auto& mbr = tree.node(tree.leaves()[i]).mbr;
      index.ihs.emplace_back(plan_cell_edges(axes, mbr, cfg.resolution),
                             cfg.layout, binning[i]);
    }
    source.scan([&](const DataPoint& pt) {
      auto id = assign_leaf(tree, scale, pt.coordinates);
      if (id == kNoNode) throw ConstructionError("row not covered by any leaf");
      tree.add_count(id, 1);
      index.ihs[tree.node(id).leaf_index].accumulate(axes, pt.coordinates,
                                                     pt.measures);
    });
    if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic)
      for (std::size_t i = 0; i < leaves; ++i) index.ihs[i].finalize(false);
    } else {
      for (auto& ih : index.ihs) ih.finalize(false);
    }

    std::vector<Rect> mbrs;
    for (auto id : tree.leaves()) mbrs.push_back(tree.node(id).mbr);
    index.lsh = LshIndex::build(axes, mbrs, cfg.lsh);
  } else {
    index.lsh = LshIndex::build(axes, {}, cfg.lsh);
  }
  index.tree = std::move(tree);
  index.derive();

  index.stats.rows = rows;
  index.stats.tree_height = index.tree.height();
  index.stats.subspaces = index.tree.leaf_count();
  index.stats.bins = 0;
  for (const auto& ih : index.ihs) index.stats.bins += ih.cells();
  index.stats.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  index.stats.storage_bytes = serialized_size(index);
  return index;
}

void Index::derive() {
  axes = schema.index_axes();
  node_totals.assign(tree.nodes().size(), FeatureDescriptor(layout));
  // Children have larger ids than their parents (breadth-first numbering).
  for (std::size_t i = tree.nodes().size(); i-- > 0;) {
    const auto& n = tree.nodes()[i];
    if (n.is_leaf()) node_totals[i] = ihs[n.leaf_index].total();
    if (n.parent != kNoNode) node_totals[n.parent] += node_totals[i];
  }
}

std::uint64_t Index::total_count() const {
  if (tree.empty()) return 0;
  return static_cast<std::uint64_t>(node_totals[tree.root()].count());
}

}  // namespace ihcube
