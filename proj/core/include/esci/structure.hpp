#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace esci::fusion {

/// Fusion structure: the reception order of n estimates (0-based indices into
/// the input list) and the composition of n into per-step batch sizes.
class FusionStructure {
 public:
  FusionStructure() = default;

  /// Throws Error(InvalidStructure) unless order is a permutation of 0..n-1
  /// and batch_sizes is a composition of n with positive parts.
  FusionStructure(std::vector<std::size_t> order, std::vector<std::size_t> batch_sizes);

  /// a = {n}, identity order.
  static FusionStructure batch(std::size_t n);
  /// a = {1, ..., 1}, identity order.
  static FusionStructure sequential(std::size_t n);

  std::size_t size() const { return order_.size(); }
  std::size_t steps() const { return batch_sizes_.size(); }
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<std::size_t>& batch_sizes() const { return batch_sizes_; }

  /// b_i = a_1 + ... + a_i, with prefix(0) = 0 and prefix(steps()) = n.
  std::size_t prefix(std::size_t i) const { return prefix_[i]; }

  /// e.g. "r={4,2,1,3} a={2,2}" (1-based order, as usually written).
  std::string describe() const;

  friend bool operator==(const FusionStructure&, const FusionStructure&) = default;

 private:
  std::vector<std::size_t> order_;
  std::vector<std::size_t> batch_sizes_;
  std::vector<std::size_t> prefix_;
};

/// Uniform random permutation and a uniformly random composition of n
/// (each of the n-1 gaps is a cut with probability 1/2).
FusionStructure random_structure(std::size_t n, std::uint64_t seed);

}  // namespace esci::fusion
