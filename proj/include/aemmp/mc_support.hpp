// SPDX-License-Identifier: Apache-2.0
//
// Support-chain message passing: forward/backward recursions over the
// two-state Markov chains, activation evidence, and posterior support
// marginals. One chain per user; chains share hyper-parameters.

#ifndef AEMMP_MC_SUPPORT_HPP
#define AEMMP_MC_SUPPORT_HPP

#include <vector>

#include "aemmp/complex_matrix.hpp"
#include "aemmp/priors.hpp"

namespace aemmp {

// All entries are Bernoulli "probability of 1" parameters in [0,1].
struct McState {
    RealMatrix lambda_fwd;  // L x K
    RealMatrix lambda_bwd;  // L x K
    RealMatrix pi_in;       // L x K
    RealMatrix pi_out;      // L x K
    RealMatrix omega;       // L x K posterior P(c=1)
};

// Activation evidence from the channel-coefficient messages CN(q, vq) against
// slab variance varphi_k. Clamped to [kProbEps, 1 - kProbEps].
RealMatrix compute_pi_out(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                          const std::vector<double>& varphi);

// Forward recursion starts at lambda, backward at the uninformative 1/2.
void forward_backward(const RealMatrix& pi_out, double lambda, double p01,
                      RealMatrix& lambda_fwd, RealMatrix& lambda_bwd);

RealMatrix compute_pi_in(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd);

RealMatrix compute_omega(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd,
                         const RealMatrix& pi_out);

// Two-slice smoothed joints P(c_{l+1}=1, c_l=1 | evidence), (L-1) x K.
RealMatrix pairwise_posterior(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd,
                              const RealMatrix& pi_out, double lambda, double p01);

// Per-entry spike-and-slab descriptors fed back into the factorization as the
// channel-coefficient prior messages.
struct SPriorMsgs {
    RealMatrix active_prob;  // pi_in, L x K
    RealMatrix slab_var;     // varphi_k broadcast, L x K
};

SPriorMsgs build_s_prior_msgs(const RealMatrix& pi_in, const std::vector<double>& varphi);

// Convenience: the full per-E-step chain update.
McState update_mc_state(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                        const std::vector<double>& varphi, double lambda, double p01);

}  // namespace aemmp

#endif
