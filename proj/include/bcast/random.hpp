#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bcast/tensor.hpp"

namespace bcast {

using Rng = std::mt19937_64;

/// Tensor of i.i.d. standard normal entries drawn in column-major order.
inline Tensor random_normal(const Shape& shape, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(shape.numel());
  for (double& e : v) e = dist(rng);
  return Tensor(shape, std::move(v));
}

/// Derives an independent stream seed from a base seed and a salt
/// (splitmix64 finalizer).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace bcast
