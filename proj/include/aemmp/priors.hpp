// SPDX-License-Identifier: Apache-2.0
//
// Probabilistic model pieces: signal prior, spike-and-slab channel prior,
// Bernoulli/Markov support hyper-parameters, and the scalar denoisers built
// from them.

#ifndef AEMMP_PRIORS_HPP
#define AEMMP_PRIORS_HPP

#include <array>
#include <vector>

#include "aemmp/array_geometry.hpp"
#include "aemmp/complex_matrix.hpp"
#include "aemmp/rng.hpp"

namespace aemmp {

// Clamp applied to message probabilities to avoid log/division singularities.
inline constexpr double kProbEps = 1e-12;

// Clamp applied to learned hyper-parameters (lambda, p01).
inline constexpr double kHyperProbEps = 1e-6;

inline double clamp_prob(double p, double eps = kProbEps) {
    if (p < eps) return eps;
    if (p > 1.0 - eps) return 1.0 - eps;
    return p;
}

// The EM-learned state: noise level, support sparsity/persistence, per-user
// slab variances, and the angle grid itself.
struct HyperParams {
    double noise_var = 1.0;           // sigma^2
    double lambda = 0.1;              // marginal P(support)
    double p01 = 0.5;                 // P(c_l = 0 | c_{l-1} = 1)
    std::vector<double> varphi;       // per-user slab variances, length K
    AngleGrid grid;

    double p10() const { return p01 * lambda / (1.0 - lambda); }
};

// Two-state support chain. rows[c_prev][c_next], each row sums to 1.
struct TransitionTable {
    double p10 = 0.0;
    std::array<std::array<double, 2>, 2> rows{};
};

// Derives p10 = p01*lambda/(1-lambda) and the transition table; the chain is
// then consistent with marginal activity lambda. Throws when the derived p10
// leaves [0, 1].
TransitionTable transition_probs(double lambda, double p01);

// Spike-and-slab mixture descriptor: P(active)*CN(0, slab_var) +
// (1 - P(active))*delta.
struct SpikeSlab {
    double active_prob = 0.0;
    double slab_var = 0.0;
    double second_moment() const { return active_prob * slab_var; }
};

// Marginal prior on a channel coefficient: weight lambda on the slab CN(0,
// varphi_k).
SpikeSlab marginal_s_prior(double lambda, double varphi_k);

// Circular-Gaussian signal prior exposing the (mean, variance) denoiser
// interface the message passing consumes.
class SignalPrior {
public:
    explicit SignalPrior(double variance = 1.0);

    double variance() const { return variance_; }
    cplx sample(Rng& rng) const { return sample_cgaussian(cplx(0.0, 0.0), variance_, rng); }

    // Posterior moments of x under prior CN(0, variance) and pseudo-likelihood
    // CN(x; r, vr). Precisions add: 1/var_post = 1/vr + 1/variance.
    void posterior(cplx r, double vr, cplx& mean_out, double& var_out) const;

private:
    double variance_;
};

// P(active) of a coefficient with pseudo-likelihood CN(s; q, vq) and a
// half/half activity prior, i.e. the normalized slab-vs-spike evidence ratio.
// Result clamped to [kProbEps, 1 - kProbEps].
double slab_activation_prob(cplx q, double vq, double slab_var);

// Full scalar spike-and-slab posterior under pseudo-likelihood CN(s; q, vq)
// and prior active_prob*CN(0, slab_var) + (1-active_prob)*delta.
struct SpikeSlabPosterior {
    cplx mean;           // E[s]
    double var = 0.0;    // Var[s]
    double eta = 0.0;    // posterior P(active)
    cplx slab_mean;      // chi: slab-component mean
    double slab_var = 0.0;  // nu: slab-component variance
};

SpikeSlabPosterior spike_slab_posterior(cplx q, double vq, double active_prob,
                                        double slab_var);

}  // namespace aemmp

#endif
