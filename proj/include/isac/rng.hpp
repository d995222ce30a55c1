// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "isac/types.hpp"

namespace isac {

// Stream purposes. Every random draw goes through a stream keyed by
// (root seed, purpose, indices) so results never depend on scheduling.
enum class Purpose : std::uint64_t {
  Channel = 1,
  Target = 2,
  Waveform = 3,
  CommSymbols = 4,
  RadarSymbols = 5,
  Noise = 6,
  Calibration = 7,
  Detection = 8,
  Ber = 9,
  Test = 10,
  Estimation = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Independent child stream for (root, purpose, i, j, k).
  static Rng stream(std::uint64_t root, Purpose purpose,
                    std::initializer_list<std::uint64_t> idx = {});

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  double normal() { return norm_(eng_); }
  // Circularly-symmetric complex Gaussian with E|z|^2 = var.
  cd cnormal(double var = 1.0);
  CMat cnormal(Eigen::Index rows, Eigen::Index cols, double var = 1.0);
  int uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(eng_); }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace isac
