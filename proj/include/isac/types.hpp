// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace isac {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Radar waveform tensor N x L x T, stored as T slices W_{r,t} of shape N x L.
using RadarTensor = std::vector<CMat>;

inline constexpr double kLn2 = std::numbers::ln2;

// Named error types. All derive from std::runtime_error so callers can catch broadly.
#define ISAC_ERROR(Name)                                                   \
  struct Name : std::runtime_error {                                       \
    explicit Name(const std::string& what) : std::runtime_error(what) {}   \
  }

ISAC_ERROR(ConfigError);
ISAC_ERROR(SingularChannel);
ISAC_ERROR(NumericalSingularity);
ISAC_ERROR(NonFiniteObjective);
ISAC_ERROR(InfeasibleStart);
ISAC_ERROR(EmptyInput);
ISAC_ERROR(IoError);
ISAC_ERROR(UsageError);

struct PowerSplitViolation : ConfigError { using ConfigError::ConfigError; };
struct DegenerateGeometry : ConfigError { using ConfigError::ConfigError; };
struct NonPositiveDistance : ConfigError { using ConfigError::ConfigError; };
struct UnsupportedOrder : ConfigError { using ConfigError::ConfigError; };
struct ConfigParseError : ConfigError { using ConfigError::ConfigError; };

#undef ISAC_ERROR

// Sum of squared magnitudes over all slices.
inline double frob2(const RadarTensor& w) {
  double s = 0.0;
  for (const auto& m : w) s += m.squaredNorm();
  return s;
}

// Real inner product Re<A,B> = Re tr(A^H B).
inline double re_inner(const CMat& a, const CMat& b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

inline double re_inner(const RadarTensor& a, const RadarTensor& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += re_inner(a[t], b[t]);
  return s;
}

inline RadarTensor axpy(const RadarTensor& x, double alpha, const RadarTensor& g) {
  RadarTensor out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = x[t] + alpha * g[t];
  return out;
}

}  // namespace isac
