#pragma once

#include <array>
#include <cstdint>

namespace fragscope {

/// Exact fixed-point accumulator for non-negative finite doubles.
///
/// Every double in [0, 2^128) is representable as an integer multiple of the
/// smallest subnormal, so the running sum is held exactly in a 1216-bit
/// integer. Addition is associative and commutative; the result of value()
/// depends only on the multiset of terms, never on summation order, chunking,
/// or worker count.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  /// Deterministic conversion; within a couple of ulps of the exact sum.
  double value() const;
  bool is_zero() const;

 private:
  static constexpr int kLimbs = 19;
  std::array<std::uint64_t, kLimbs> limbs_{};

  void add_at(int limb, std::uint64_t low, std::uint64_t high);
};

}  // namespace fragscope
