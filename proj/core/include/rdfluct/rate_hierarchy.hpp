#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rdfluct {

/// Nested hierarchy of summed event rates over 2^L fine voxels.
///
/// Level i holds 2^i partial sums; level L holds the voxel rates themselves
/// (padded with zeros up to the next power of two). Every internal node is
/// recomputed as the exact sum of its two children whenever a descendant leaf
/// changes, so incremental updates and a full rebuild agree bit for bit.
class RateHierarchy {
 public:
  explicit RateHierarchy(std::size_t n_leaves);

  std::size_t size() const noexcept { return n_leaves_; }
  std::size_t levels() const noexcept { return depth_ + 1; }

  /// Partial sums of level i (2^i entries); level(0) is the root.
  std::span<const double> level(std::size_t i) const noexcept {
    return {nodes_.data() + (std::size_t{1} << i), std::size_t{1} << i};
  }

  double total() const noexcept { return nodes_[1]; }
  double leaf(std::size_t i) const noexcept { return nodes_[width_ + i]; }

  void update(std::size_t leaf, double rate) noexcept;

  /// Replaces all leaves and recomputes every internal node.
  void assign(std::span<const double> leaf_rates);

  /// Leaf whose cumulative interval contains target in (0, total]; the search
  /// descends left whenever target <= left subtree sum.
  std::size_t find(double target) const noexcept;

  /// find(u * total) for u in (0, 1].
  std::size_t select(double u) const noexcept { return find(u * total()); }

 private:
  std::size_t n_leaves_;
  std::size_t depth_ = 0;
  std::size_t width_ = 1;
  std::vector<double> nodes_;
};

}  // namespace rdfluct
