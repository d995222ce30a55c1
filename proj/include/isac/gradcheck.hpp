// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isac/gradients.hpp"

namespace isac {

struct GradcheckRow {
  int instance = 0;
  std::string name;
  double rel_error = 0.0;
  bool certified = true;  // false for the printed variants, reported only
  bool pass = false;
};

// Random small instance used by the certification suite.
struct GradInstance {
  ScenarioConfig cfg;
  CMat H;
  TargetSet tg;
  RadarTensor Wr;
  CMat W_c;
  double sigma_n2 = 1.0;
};

GradInstance random_grad_instance(std::uint64_t seed, int index);

// Every analytic gradient against the central-difference oracle on
// `instances` random problems (N <= 8, K <= 3, T <= 2, L <= 4).
std::vector<GradcheckRow> gradient_certification(int instances, std::uint64_t seed,
                                                 double tol = 1e-5);

}  // namespace isac
