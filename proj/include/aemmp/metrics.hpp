// SPDX-License-Identifier: Apache-2.0

#ifndef AEMMP_METRICS_HPP
#define AEMMP_METRICS_HPP

#include "aemmp/complex_matrix.hpp"

namespace aemmp {

// Per-user log2(1 + ||x||^2/||x - x_hat||^2) terms are capped here so a
// zero-error user keeps the aggregate finite.
inline constexpr double kRateLogCap = 60.0;

// ||est - truth||_F^2 / ||truth||_F^2. Throws on zero truth.
double nmse(const ComplexMatrix& est, const ComplexMatrix& truth);

// Blind achievable rate: per-user (1 - 1/T) log-terms minus the
// K*ceil(log2 K)/T permutation-label loss.
double rate_blind(const ComplexMatrix& X_true, const ComplexMatrix& X_hat);

// Training-based achievable rate with a (1 - T_train/T) prefactor and no
// label loss. Requires t_train < T.
double rate_training(const ComplexMatrix& X_true, const ComplexMatrix& X_hat, int t_train);

}  // namespace aemmp

#endif
