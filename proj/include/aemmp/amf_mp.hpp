// SPDX-License-Identifier: Apache-2.0
//
// Approximate message passing for the affine matrix factorization
// Y = A*W + noise with W = S*X: the inner loop of the E-step. Means are
// complex matrices, variances element-wise real matrices.

#ifndef AEMMP_AMF_MP_HPP
#define AEMMP_AMF_MP_HPP

#include <iosfwd>
#include <span>
#include <utility>

#include "aemmp/complex_matrix.hpp"
#include "aemmp/mc_support.hpp"
#include "aemmp/priors.hpp"
#include "aemmp/rng.hpp"

namespace aemmp {

struct AmfDims {
    int n = 0;  // receive antennas
    int l = 0;  // grid points
    int k = 0;  // users
    int t = 0;  // observed columns
};

struct DampingConfig {
    double initial = 0.15;
    double min_factor = 0.15;
    double max_factor = 0.15;
    double grow = 1.0;
    double shrink = 1.0;
};

struct AmfConfig {
    int max_inner_iters = 300;   // I_max
    double stop_tol = 1e-4;      // delta_1 on the relative x-change
    DampingConfig damping;
    double variance_floor = 1e-12;
    double variance_ceiling = 1e10;

    // Freeze the x posterior for the first x_freeze_iters iterations (at
    // damping freeze_rho): with x quasi-static the support side and the
    // internal message fields converge first, after which the joint recursion
    // is locally stable. Used for the first warm-up E-step of a run.
    int x_freeze_iters = 0;
    double freeze_rho = 0.5;

    // The bilinear model fixes only the product S*X; the factor scales are
    // anchored by the unit-power signal prior. When a user's posterior signal
    // power drifts outside [1/scale_guard, scale_guard] the (x, s) mean pair
    // is rebalanced (product preserved) to stop scale runaway. <= 1 disables.
    double scale_guard = 1.2;

};

// All per-entry means/variances of the recursion. prev_* hold the one-step
// memories consumed by the first-order correction terms.
struct AmfState {
    AmfDims dims;

    ComplexMatrix w_hat;      // L x T
    RealMatrix v_w;
    ComplexMatrix u_hat;      // N x T
    RealMatrix v_u;
    ComplexMatrix z_hat;      // N x T
    RealMatrix v_z;
    ComplexMatrix beta_hat;   // N x T
    RealMatrix v_beta;
    ComplexMatrix zeta_hat;   // L x T
    RealMatrix v_zeta;
    ComplexMatrix p_hat;      // L x T
    RealMatrix v_p;
    ComplexMatrix gamma_hat;  // L x T
    RealMatrix v_gamma;
    ComplexMatrix r_hat;      // K x T
    RealMatrix v_r;
    ComplexMatrix q_hat;      // L x K
    RealMatrix v_q;
    ComplexMatrix x_hat;      // K x T
    RealMatrix v_x;
    ComplexMatrix s_hat;      // L x K
    RealMatrix v_s;

    ComplexMatrix prev_beta_hat;   // N x T
    ComplexMatrix prev_gamma_hat;  // L x T

    // Continuation bookkeeping: a fresh state takes one undamped step to
    // populate its fields; warm restarts resume at the carried damping
    // factor.
    bool bootstrapped = false;
    double rho_carry = 0.0;

    long clamp_events = 0;

    bool core_finite() const {
        return x_hat.is_finite() && s_hat.is_finite() && w_hat.is_finite() &&
               q_hat.is_finite() && z_hat.is_finite() && gamma_hat.is_finite();
    }
};

// Initial state: w/s variances and x variance at 10, w/s means zero, x means
// drawn from the signal prior, correction memories zero.
AmfState init_state(const AmfDims& dims, const SignalPrior& prior, Rng& rng);

// Mean and variance of w = sum_k s_k * x_k from per-factor moments.
std::pair<cplx, double> fact1_moments(std::span<const cplx> s_means,
                                      std::span<const double> s_vars,
                                      std::span<const cplx> x_means,
                                      std::span<const double> x_vars);

// Output-side half step: v_u/u (with the first-order correction using the
// previous beta), the AWGN output denoiser z, beta, and zeta. Stores the new
// beta into prev_beta_hat. rho is the damping factor applied to the damped
// quantities (v_u, v_beta, beta).
void output_half_step(AmfState& state, const ComplexMatrix& A, const ComplexMatrix& Y,
                      double noise_var, double rho, const AmfConfig& cfg);

// Central half step: v_p/p (correction via prev_gamma_hat) and gamma; stores
// gamma into prev_gamma_hat. Damps v_p, v_gamma, gamma.
void central_half_step(AmfState& state, double rho, const AmfConfig& cfg);

// Combines the zeta and p messages into the w mean/variance pair. Damped.
void update_w_messages(AmfState& state, double rho, const AmfConfig& cfg);

// Input-side half step: r and q pseudo-data, then the posterior moments of x
// (Gaussian product) and s (spike-and-slab). Damps the posterior moments.
// update_x / update_s select which factor's posterior refreshes this pass.
void input_half_step(AmfState& state, const SignalPrior& prior, const SPriorMsgs& msgs,
                     double rho, const AmfConfig& cfg, bool update_x = true,
                     bool update_s = true);

struct AmfRunInfo {
    int iterations = 0;
    double residual = 0.0;      // ||Y - A*w_hat||_F at exit
    double rho = 0.0;           // damping factor at exit
    bool converged = false;
};

// Full inner loop with adaptive damping: the damping factor shrinks when the
// data-fit residual grows and recovers slowly otherwise. Iterates until the
// relative change of x_hat drops below stop_tol or max_inner_iters is
// reached. Throws std::runtime_error (with the iteration index) if the state
// turns non-finite. Optional diagnostics stream receives CSV lines
// "iteration,residual,rho,clamp_events".
AmfRunInfo run_amf(AmfState& state, const ComplexMatrix& A, const ComplexMatrix& Y,
                   double noise_var, const SignalPrior& prior, const SPriorMsgs& msgs,
                   const AmfConfig& cfg, std::ostream* diagnostics = nullptr);

}  // namespace aemmp

#endif
