#include "esci/structure.hpp"

#include "esci/estimate.hpp"
#include "esci/random.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace esci::fusion {

FusionStructure::FusionStructure(std::vector<std::size_t> order, std::vector<std::size_t> batch_sizes)
    : order_(std::move(order)), batch_sizes_(std::move(batch_sizes)) {
  const std::size_t n = order_.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "fusion structure over zero estimates");
  std::vector<bool> seen(n, false);
  for (std::size_t r : order_) {
    if (r >= n || seen[r]) throw Error(ErrorCode::InvalidStructure, "order is not a permutation");
    seen[r] = true;
  }
  prefix_.assign(1, 0);
  for (std::size_t a : batch_sizes_) {
    if (a == 0) throw Error(ErrorCode::InvalidStructure, "batch sizes must be positive");
    prefix_.push_back(prefix_.back() + a);
  }
  if (prefix_.back() != n) {
    throw Error(ErrorCode::InvalidStructure, "batch sizes do not sum to the number of estimates");
  }
}

FusionStructure FusionStructure::batch(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return {std::move(order), {n}};
}

FusionStructure FusionStructure::sequential(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return {std::move(order), std::vector<std::size_t>(n, 1)};
}

std::string FusionStructure::describe() const {
  std::ostringstream os;
  os << "r={";
  for (std::size_t i = 0; i < order_.size(); ++i) os << (i ? "," : "") << order_[i] + 1;
  os << "} a={";
  for (std::size_t i = 0; i < batch_sizes_.size(); ++i) os << (i ? "," : "") << batch_sizes_[i];
  os << "}";
  return os.str();
}

FusionStructure random_structure(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "random_structure: n must be >= 1");
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution cut(0.5);
  std::vector<std::size_t> sizes;
  std::size_t run = 1;
  for (std::size_t gap = 0; gap + 1 < n; ++gap) {
    if (cut(rng)) {
      sizes.push_back(run);
      run = 1;
    } else {
      ++run;
    }
  }
  sizes.push_back(run);
  return {std::move(order), std::move(sizes)};
}

}  // namespace esci::fusion
