// SPDX-License-Identifier: Apache-2.0
//
// M-step: fixed-point hyper-parameter updates and the sign-gradient angle
// tuning of the sampling grid.

#ifndef AEMMP_EM_MSTEP_HPP
#define AEMMP_EM_MSTEP_HPP

#include <vector>

#include "aemmp/array_geometry.hpp"
#include "aemmp/complex_matrix.hpp"
#include "aemmp/priors.hpp"

namespace aemmp {

inline constexpr double kSigma2Floor = 1e-12;
inline constexpr double kVarphiFloor = 1e-12;

// Posterior quantities entering the varphi update: activation weight eta,
// slab posterior variance nu, slab posterior mean chi.
struct MStepScratch {
    RealMatrix eta;     // L x K
    RealMatrix nu;      // L x K
    ComplexMatrix chi;  // L x K
};

MStepScratch compute_mstep_scratch(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                                   const RealMatrix& pi_in, const RealMatrix& pi_out,
                                   const std::vector<double>& varphi);

// (||Y - z_hat||_F^2 + sum v_z) / (N*T), floored at kSigma2Floor.
double update_sigma2(const ComplexMatrix& Y, const ComplexMatrix& z_hat,
                     const RealMatrix& v_z);

// Per-user varphi_k = sum_l eta (|chi|^2 + nu) / sum_l eta; kept unchanged
// when a user shows no posterior activity.
std::vector<double> update_varphi(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                                  const RealMatrix& pi_in, const RealMatrix& pi_out,
                                  const std::vector<double>& varphi_old);
std::vector<double> update_varphi(const MStepScratch& scratch,
                                  const std::vector<double>& varphi_old);

// p01 = 1 - sum pairwise / sum_{l<L} omega, clamped to
// [kHyperProbEps, 1 - kHyperProbEps]. Keeps the old value when the posterior
// activity sums to zero.
double update_p01(const RealMatrix& pairwise, const RealMatrix& omega, double p01_old);

// Mean of the first-row support posteriors, clamped.
double update_lambda(const RealMatrix& omega);

struct AngleTuneConfig {
    int step_integer_t = 7;        // epsilon = pi / (2 * t * L)
    int updates_per_em_iter = 2;   // 0 disables tuning
};

// Expectation context for the angle objective/gradient. Y here is whatever
// observation matrix the message passing ran against.
struct AngleTuneContext {
    const ComplexMatrix& Y;      // N x T
    const ComplexMatrix& w_hat;  // L x T
    const RealMatrix& v_w;       // L x T
    const ArrayGeometry& geom;
    double sigma2 = 1.0;
};

// Expected log-likelihood as a function of grid angle l, with column l of the
// response matrix replaced by a(theta):
//   -sigma^-2 ||Y - A W||_F^2 - sigma^-2 sum_{l,t} v_w ||a_l||^2.
double angle_objective(const AngleTuneContext& ctx, const AngleGrid& grid, std::size_t l,
                       double theta);

// Analytic derivative of angle_objective w.r.t. theta.
double angle_gradient(const AngleTuneContext& ctx, const AngleGrid& grid, std::size_t l,
                      double theta);

// Sequential sweeps moving every grid angle by +-epsilon in the gradient
// direction (zero gradient leaves the angle in place), repeated
// updates_per_em_iter times; angles stay inside the open azimuth range.
AngleGrid tune_grid(const AngleGrid& grid, const AngleTuneContext& ctx,
                    const AngleTuneConfig& cfg);

}  // namespace aemmp

#endif
