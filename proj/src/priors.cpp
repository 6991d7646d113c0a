// SPDX-License-Identifier: Apache-2.0

#include "aemmp/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace aemmp {

TransitionTable transition_probs(double lambda, double p01) {
    if (!(lambda > 0.0 && lambda < 1.0)) {
        throw std::invalid_argument("transition_probs: lambda outside (0,1)");
    }
    if (p01 < 0.0 || p01 > 1.0) {
        throw std::invalid_argument("transition_probs: p01 outside [0,1]");
    }
    const double p10 = p01 * lambda / (1.0 - lambda);
    if (p10 > 1.0) {
        throw std::invalid_argument("transition_probs: derived p10 exceeds 1");
    }
    TransitionTable t;
    t.p10 = p10;
    t.rows[0] = {1.0 - p10, p10};
    t.rows[1] = {p01, 1.0 - p01};
    return t;
}

SpikeSlab marginal_s_prior(double lambda, double varphi_k) {
    if (lambda < 0.0 || lambda > 1.0) {
        throw std::invalid_argument("marginal_s_prior: lambda outside [0,1]");
    }
    if (varphi_k < 0.0) {
        throw std::invalid_argument("marginal_s_prior: negative slab variance");
    }
    return SpikeSlab{lambda, varphi_k};
}

SignalPrior::SignalPrior(double variance) : variance_(variance) {
    if (variance <= 0.0) throw std::invalid_argument("SignalPrior: variance must be positive");
}

void SignalPrior::posterior(cplx r, double vr, cplx& mean_out, double& var_out) const {
    var_out = 1.0 / (1.0 / vr + 1.0 / variance_);
    mean_out = r * (var_out / vr);
}

double slab_activation_prob(cplx q, double vq, double slab_var) {
    // 1/pi = 1 + ((phi + vq)/vq) * exp(|q|^2/(vq + phi) - |q|^2/vq); the
    // exponent is never positive, so the exp cannot overflow.
    if (!(vq > 0.0)) return 0.5;  // unstarted message: uninformative
    const double q2 = std::norm(q);
    if (!std::isfinite(q2)) return 1.0 - kProbEps;  // overwhelming evidence
    const double expo = q2 / (vq + slab_var) - q2 / vq;
    const double inv_pi = 1.0 + ((slab_var + vq) / vq) * std::exp(expo);
    return clamp_prob(1.0 / inv_pi);
}

SpikeSlabPosterior spike_slab_posterior(cplx q, double vq, double active_prob,
                                        double slab_var) {
    SpikeSlabPosterior post;
    post.slab_var = slab_var * vq / (slab_var + vq);
    post.slab_mean = q * (slab_var / (slab_var + vq));

    const double pi_out = slab_activation_prob(q, vq, slab_var);
    const double on = active_prob * pi_out;
    const double off = (1.0 - active_prob) * (1.0 - pi_out);
    post.eta = on / (on + off);

    post.mean = post.eta * post.slab_mean;
    const double second = post.eta * (std::norm(post.slab_mean) + post.slab_var);
    post.var = second - std::norm(post.mean);
    return post;
}

}  // namespace aemmp
