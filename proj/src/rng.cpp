// SPDX-License-Identifier: Apache-2.0
#include "isac/rng.hpp"

#include <cmath>

namespace isac {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng Rng::stream(std::uint64_t root, Purpose purpose,
                std::initializer_list<std::uint64_t> idx) {
  std::uint64_t h = splitmix64(root ^ 0x5eed5eed5eed5eedULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  for (auto i : idx) h = splitmix64(h ^ splitmix64(i + 0x1234567ULL));
  return Rng(h);
}

cd Rng::cnormal(double var) {
  const double s = std::sqrt(var / 2.0);
  const double re = norm_(eng_);
  const double im = norm_(eng_);
  return {s * re, s * im};
}

CMat Rng::cnormal(Eigen::Index rows, Eigen::Index cols, double var) {
  CMat m(rows, cols);
  // column-major fill order is part of the reproducibility contract
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cnormal(var);
  return m;
}

}  // namespace isac
