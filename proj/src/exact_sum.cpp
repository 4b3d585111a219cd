#include "fragscope/exact_sum.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace fragscope {
namespace {

// Bit 0 of the accumulator has weight 2^-1074.
constexpr int kMinExponent = -1074;

}  // namespace

void ExactSum::add_at(int limb, std::uint64_t low, std::uint64_t high) {
  unsigned __int128 carry = 0;
  for (int i = limb; i < kLimbs; ++i) {
    unsigned __int128 s = static_cast<unsigned __int128>(limbs_[i]) + carry;
    if (i == limb) s += low;
    if (i == limb + 1) s += high;
    limbs_[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
    if (carry == 0 && i > limb) break;
  }
  if (carry != 0) throw std::overflow_error("ExactSum overflow");
}

void ExactSum::add(double x) {
  if (!(x >= 0.0) || !(x < 0x1p128)) throw std::domain_error("ExactSum accepts 0 <= x < 2^128");
  if (x == 0.0) return;
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const auto biased = static_cast<int>((bits >> 52) & 0x7ff);
  std::uint64_t mantissa = bits & ((std::uint64_t{1} << 52) - 1);
  int exponent;  // x = mantissa * 2^exponent
  if (biased == 0) {
    exponent = kMinExponent;
  } else {
    mantissa |= std::uint64_t{1} << 52;
    exponent = biased - 1075;
  }
  const int pos = exponent - kMinExponent;
  const int limb = pos / 64;
  const int shift = pos % 64;
  const unsigned __int128 wide = static_cast<unsigned __int128>(mantissa) << shift;
  add_at(limb, static_cast<std::uint64_t>(wide), static_cast<std::uint64_t>(wide >> 64));
}

void ExactSum::merge(const ExactSum& other) {
  unsigned __int128 carry = 0;
  for (int i = 0; i < kLimbs; ++i) {
    const unsigned __int128 s =
        static_cast<unsigned __int128>(limbs_[i]) + other.limbs_[i] + carry;
    limbs_[i] = static_cast<std::uint64_t>(s);
    carry = s >> 64;
  }
  if (carry != 0) throw std::overflow_error("ExactSum overflow");
}

double ExactSum::value() const {
  int top = kLimbs - 1;
  while (top >= 0 && limbs_[top] == 0) --top;
  if (top < 0) return 0.0;
  // The top three limbs carry at least 129 significant bits; lower limbs
  // cannot change the rounded double.
  long double acc = 0.0L;
  for (int i = std::max(0, top - 2); i <= top; ++i) {
    acc += std::ldexp(static_cast<long double>(limbs_[i]), 64 * i + kMinExponent);
  }
  return static_cast<double>(acc);
}

bool ExactSum::is_zero() const {
  for (auto l : limbs_) {
    if (l != 0) return false;
  }
  return true;
}

}  // namespace fragscope
