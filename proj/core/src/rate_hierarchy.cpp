#include "rdfluct/rate_hierarchy.hpp"

#include <stdexcept>

namespace rdfluct {

RateHierarchy::RateHierarchy(std::size_t n_leaves) : n_leaves_(n_leaves) {
  if (n_leaves == 0) throw std::invalid_argument("rate hierarchy needs at least one leaf");
  while (width_ < n_leaves) {
    width_ <<= 1;
    ++depth_;
  }
  nodes_.assign(2 * width_, 0.0);
}

void RateHierarchy::update(std::size_t leaf, double rate) noexcept {
  std::size_t node = width_ + leaf;
  nodes_[node] = rate;
  for (node >>= 1; node >= 1; node >>= 1) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

void RateHierarchy::assign(std::span<const double> leaf_rates) {
  if (leaf_rates.size() != n_leaves_) throw std::invalid_argument("leaf count mismatch");
  for (std::size_t i = 0; i < width_; ++i) nodes_[width_ + i] = i < n_leaves_ ? leaf_rates[i] : 0.0;
  for (std::size_t node = width_ - 1; node >= 1; --node) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t RateHierarchy::find(double target) const noexcept {
  std::size_t node = 1;
  while (node < width_) {
    const double left = nodes_[2 * node];
    const double right = nodes_[2 * node + 1];
    if (target <= left || right <= 0.0) {
      node = 2 * node;
    } else {
      target -= left;
      node = 2 * node + 1;
    }
  }
  return node - width_;
}

}  // namespace rdfluct
