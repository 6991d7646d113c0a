// SPDX-License-Identifier: Apache-2.0

#include "aemmp/mc_support.hpp"

#include <stdexcept>

namespace aemmp {

RealMatrix compute_pi_out(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                          const std::vector<double>& varphi) {
    const std::size_t l_pts = q_hat.rows();
    const std::size_t k_users = q_hat.cols();
    if (varphi.size() != k_users) {
        throw std::invalid_argument("compute_pi_out: varphi length mismatch");
    }
    RealMatrix out(l_pts, k_users);
    for (std::size_t l = 0; l < l_pts; ++l) {
        for (std::size_t k = 0; k < k_users; ++k) {
            out(l, k) = slab_activation_prob(q_hat(l, k), v_q(l, k), varphi[k]);
        }
    }
    return out;
}

void forward_backward(const RealMatrix& pi_out, double lambda, double p01,
                      RealMatrix& lambda_fwd, RealMatrix& lambda_bwd) {
    const std::size_t l_pts = pi_out.rows();
    const std::size_t k_users = pi_out.cols();
    const TransitionTable trans = transition_probs(lambda, p01);
    const double p10 = trans.p10;

    lambda_fwd = RealMatrix(l_pts, k_users);
    lambda_bwd = RealMatrix(l_pts, k_users);

    for (std::size_t k = 0; k < k_users; ++k) {
        lambda_fwd(0, k) = clamp_prob(lambda);
        for (std::size_t l = 1; l < l_pts; ++l) {
            const double f = lambda_fwd(l - 1, k);
            const double ev = pi_out(l - 1, k);
            const double on = f * ev;
            const double off = (1.0 - f) * (1.0 - ev);
            lambda_fwd(l, k) = clamp_prob((p10 * off + (1.0 - p01) * on) / (off + on));
        }
        lambda_bwd(l_pts - 1, k) = 0.5;
        for (std::size_t li = l_pts - 1; li-- > 0;) {
            const double b = lambda_bwd(li + 1, k);
            const double ev = pi_out(li + 1, k);
            const double on = b * ev;
            const double off = (1.0 - b) * (1.0 - ev);
            const double num = p01 * off + (1.0 - p01) * on;
            const double den = (1.0 - p10 + p01) * off + (1.0 - p01 + p10) * on;
            lambda_bwd(li, k) = clamp_prob(num / den);
        }
    }
}

RealMatrix compute_pi_in(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd) {
    RealMatrix out(lambda_fwd.rows(), lambda_fwd.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double f = lambda_fwd.data()[i];
        const double b = lambda_bwd.data()[i];
        const double on = f * b;
        const double off = (1.0 - f) * (1.0 - b);
        out.data()[i] = clamp_prob(on / (on + off));
    }
    return out;
}

RealMatrix compute_omega(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd,
                         const RealMatrix& pi_out) {
    RealMatrix out(lambda_fwd.rows(), lambda_fwd.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double on = lambda_fwd.data()[i] * lambda_bwd.data()[i] * pi_out.data()[i];
        const double off = (1.0 - lambda_fwd.data()[i]) * (1.0 - lambda_bwd.data()[i]) *
                           (1.0 - pi_out.data()[i]);
        out.data()[i] = clamp_prob(on / (on + off));
    }
    return out;
}

RealMatrix pairwise_posterior(const RealMatrix& lambda_fwd, const RealMatrix& lambda_bwd,
                              const RealMatrix& pi_out, double lambda, double p01) {
    const std::size_t l_pts = lambda_fwd.rows();
    const std::size_t k_users = lambda_fwd.cols();
    if (l_pts < 2) throw std::invalid_argument("pairwise_posterior: need L >= 2");
    const TransitionTable trans = transition_probs(lambda, p01);

    RealMatrix out(l_pts - 1, k_users);
    for (std::size_t k = 0; k < k_users; ++k) {
        for (std::size_t l = 0; l + 1 < l_pts; ++l) {
            // Joint over (c_l, c_{l+1}) from the fwd message and evidence at l,
            // the transition, and the evidence and bwd message at l+1.
            const double left[2] = {(1.0 - lambda_fwd(l, k)) * (1.0 - pi_out(l, k)),
                                    lambda_fwd(l, k) * pi_out(l, k)};
            const double right[2] = {(1.0 - lambda_bwd(l + 1, k)) * (1.0 - pi_out(l + 1, k)),
                                     lambda_bwd(l + 1, k) * pi_out(l + 1, k)};
            double z = 0.0;
            double joint11 = 0.0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const double w = left[a] * trans.rows[a][b] * right[b];
                    z += w;
                    if (a == 1 && b == 1) joint11 = w;
                }
            }
            out(l, k) = z > 0.0 ? joint11 / z : 0.0;
        }
    }
    return out;
}

SPriorMsgs build_s_prior_msgs(const RealMatrix& pi_in, const std::vector<double>& varphi) {
    if (varphi.size() != pi_in.cols()) {
        throw std::invalid_argument("build_s_prior_msgs: varphi length mismatch");
    }
    SPriorMsgs msgs;
    msgs.active_prob = pi_in;
    msgs.slab_var = RealMatrix(pi_in.rows(), pi_in.cols());
    for (std::size_t l = 0; l < pi_in.rows(); ++l) {
        for (std::size_t k = 0; k < pi_in.cols(); ++k) {
            msgs.slab_var(l, k) = varphi[k];
        }
    }
    return msgs;
}

McState update_mc_state(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                        const std::vector<double>& varphi, double lambda, double p01) {
    McState mc;
    mc.pi_out = compute_pi_out(q_hat, v_q, varphi);
    forward_backward(mc.pi_out, lambda, p01, mc.lambda_fwd, mc.lambda_bwd);
    mc.pi_in = compute_pi_in(mc.lambda_fwd, mc.lambda_bwd);
    mc.omega = compute_omega(mc.lambda_fwd, mc.lambda_bwd, mc.pi_out);
    return mc;
}

}  // namespace aemmp
