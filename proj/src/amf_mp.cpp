// SPDX-License-Identifier: Apache-2.0

#include "aemmp/amf_mp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <ostream>
#include <stdexcept>

namespace aemmp {

namespace {

double clamp_var(double v, const AmfConfig& cfg, long& events) {
    if (v < cfg.variance_floor) {
        ++events;
        return cfg.variance_floor;
    }
    if (v > cfg.variance_ceiling) {
        ++events;
        return cfg.variance_ceiling;
    }
    return v;
}

void damp_into(RealMatrix& field, const RealMatrix& fresh, double rho) {
    for (std::size_t i = 0; i < field.size(); ++i) {
        field.data()[i] = rho * fresh.data()[i] + (1.0 - rho) * field.data()[i];
    }
}

void damp_into(ComplexMatrix& field, const ComplexMatrix& fresh, double rho) {
    for (std::size_t i = 0; i < field.size(); ++i) {
        field.data()[i] = rho * fresh.data()[i] + (1.0 - rho) * field.data()[i];
    }
}

}  // namespace

AmfState init_state(const AmfDims& dims, const SignalPrior& prior, Rng& rng) {
    AmfState st;
    st.dims = dims;
    const auto n = static_cast<std::size_t>(dims.n);
    const auto l = static_cast<std::size_t>(dims.l);
    const auto k = static_cast<std::size_t>(dims.k);
    const auto t = static_cast<std::size_t>(dims.t);

    st.w_hat = ComplexMatrix(l, t);
    st.v_w = RealMatrix(l, t, 10.0);
    st.u_hat = ComplexMatrix(n, t);
    st.v_u = RealMatrix(n, t);
    st.z_hat = ComplexMatrix(n, t);
    st.v_z = RealMatrix(n, t);
    st.beta_hat = ComplexMatrix(n, t);
    st.v_beta = RealMatrix(n, t);
    st.zeta_hat = ComplexMatrix(l, t);
    st.v_zeta = RealMatrix(l, t);
    st.p_hat = ComplexMatrix(l, t);
    st.v_p = RealMatrix(l, t);
    st.gamma_hat = ComplexMatrix(l, t);
    st.v_gamma = RealMatrix(l, t);
    st.r_hat = ComplexMatrix(k, t);
    st.v_r = RealMatrix(k, t);
    st.q_hat = ComplexMatrix(l, k);
    st.v_q = RealMatrix(l, k);
    st.x_hat = ComplexMatrix(k, t);
    st.v_x = RealMatrix(k, t, 10.0);
    st.s_hat = ComplexMatrix(l, k);
    st.v_s = RealMatrix(l, k, 10.0);
    st.prev_beta_hat = ComplexMatrix(n, t);
    st.prev_gamma_hat = ComplexMatrix(l, t);

    for (cplx& v : st.x_hat.data()) v = prior.sample(rng);
    return st;
}

std::pair<cplx, double> fact1_moments(std::span<const cplx> s_means,
                                      std::span<const double> s_vars,
                                      std::span<const cplx> x_means,
                                      std::span<const double> x_vars) {
    if (s_means.size() != s_vars.size() || s_means.size() != x_means.size() ||
        s_means.size() != x_vars.size()) {
        throw std::invalid_argument("fact1_moments: length mismatch");
    }
    cplx mean(0.0, 0.0);
    double var = 0.0;
    for (std::size_t k = 0; k < s_means.size(); ++k) {
        mean += s_means[k] * x_means[k];
        var += std::norm(s_means[k]) * x_vars[k] + s_vars[k] * std::norm(x_means[k]) +
               s_vars[k] * x_vars[k];
    }
    return {mean, var};
}

void output_half_step(AmfState& state, const ComplexMatrix& A, const ComplexMatrix& Y,
                      double noise_var, double rho, const AmfConfig& cfg) {
    if (noise_var <= 0.0) throw std::invalid_argument("output_half_step: noise_var must be > 0");
    const std::size_t n = Y.rows();
    const std::size_t t = Y.cols();
    const std::size_t l = A.cols();

    RealMatrix a2(n, l);
    for (std::size_t i = 0; i < a2.size(); ++i) a2.data()[i] = std::norm(A.data()[i]);

    // v_u (damped), then u with the correction -v_u * beta(i-1).
    RealMatrix v_u_new(n, t);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            const double w = a2(i, j);
            if (w == 0.0) continue;
            for (std::size_t tt = 0; tt < t; ++tt) v_u_new(i, tt) += w * state.v_w(j, tt);
        }
    }
    damp_into(state.v_u, v_u_new, rho);
    for (double& v : state.v_u.data()) v = clamp_var(v, cfg, state.clamp_events);

    state.u_hat = matmul(A, state.w_hat);
    for (std::size_t i = 0; i < state.u_hat.size(); ++i) {
        state.u_hat.data()[i] -= state.v_u.data()[i] * state.prev_beta_hat.data()[i];
    }

    // AWGN output denoiser and the beta quantities; (z - u)/v_u and
    // (v_u - v_z)/v_u^2 reduce to the forms below.
    ComplexMatrix beta_new(n, t);
    RealMatrix v_beta_new(n, t);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            const double vu = state.v_u(i, tt);
            const double den = vu + noise_var;
            state.v_z(i, tt) = clamp_var(vu * noise_var / den, cfg, state.clamp_events);
            state.z_hat(i, tt) = (state.u_hat(i, tt) * noise_var + Y(i, tt) * vu) / den;
            v_beta_new(i, tt) = 1.0 / den;
            beta_new(i, tt) = (Y(i, tt) - state.u_hat(i, tt)) / den;
        }
    }
    damp_into(state.v_beta, v_beta_new, rho);
    for (double& v : state.v_beta.data()) v = clamp_var(v, cfg, state.clamp_events);
    damp_into(state.beta_hat, beta_new, rho);

    // zeta: combine the antenna-side messages back onto w.
    for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            double prec = 0.0;
            cplx acc(0.0, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                prec += a2(i, j) * state.v_beta(i, tt);
                acc += std::conj(A(i, j)) * state.beta_hat(i, tt);
            }
            const double vz = clamp_var(prec > 0.0 ? 1.0 / prec : cfg.variance_ceiling, cfg,
                                        state.clamp_events);
            state.v_zeta(j, tt) = vz;
            state.zeta_hat(j, tt) = state.w_hat(j, tt) + vz * acc;
        }
    }

    state.prev_beta_hat = state.beta_hat;
}

void central_half_step(AmfState& state, double rho, const AmfConfig& cfg) {
    const std::size_t l = state.w_hat.rows();
    const std::size_t t = state.w_hat.cols();
    const std::size_t k = state.x_hat.rows();

    RealMatrix v_p_new(l, t);
    for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            cplx mean(0.0, 0.0);
            double var = 0.0;
            double corr = 0.0;  // sum_k |s|^2 v_x + v_s |x|^2
            for (std::size_t kk = 0; kk < k; ++kk) {
                const cplx s = state.s_hat(j, kk);
                const cplx x = state.x_hat(kk, tt);
                const double vs = state.v_s(j, kk);
                const double vx = state.v_x(kk, tt);
                mean += s * x;
                const double cross = std::norm(s) * vx + vs * std::norm(x);
                corr += cross;
                var += cross + vs * vx;
            }
            v_p_new(j, tt) = var;
            state.p_hat(j, tt) = mean - state.prev_gamma_hat(j, tt) * corr;
        }
    }
    damp_into(state.v_p, v_p_new, rho);
    for (double& v : state.v_p.data()) v = clamp_var(v, cfg, state.clamp_events);

    RealMatrix v_gamma_new(l, t);
    ComplexMatrix gamma_new(l, t);
    for (std::size_t i = 0; i < state.v_p.size(); ++i) {
        const double den = state.v_p.data()[i] + state.v_zeta.data()[i];
        v_gamma_new.data()[i] = 1.0 / den;
        gamma_new.data()[i] = (state.zeta_hat.data()[i] - state.p_hat.data()[i]) / den;
    }
    damp_into(state.v_gamma, v_gamma_new, rho);
    for (double& v : state.v_gamma.data()) v = clamp_var(v, cfg, state.clamp_events);
    damp_into(state.gamma_hat, gamma_new, rho);

    state.prev_gamma_hat = state.gamma_hat;
}

void update_w_messages(AmfState& state, double rho, const AmfConfig& cfg) {
    RealMatrix v_w_new(state.v_w.rows(), state.v_w.cols());
    ComplexMatrix w_new(state.w_hat.rows(), state.w_hat.cols());
    for (std::size_t i = 0; i < state.v_w.size(); ++i) {
        const double vp = state.v_p.data()[i];
        const double vz = state.v_zeta.data()[i];
        const double den = vp + vz;
        v_w_new.data()[i] = vp * vz / den;
        w_new.data()[i] = (state.zeta_hat.data()[i] * vp + state.p_hat.data()[i] * vz) / den;
    }
    damp_into(state.v_w, v_w_new, rho);
    for (double& v : state.v_w.data()) v = clamp_var(v, cfg, state.clamp_events);
    damp_into(state.w_hat, w_new, rho);
}

void input_half_step(AmfState& state, const SignalPrior& prior, const SPriorMsgs& msgs,
                     double rho, const AmfConfig& cfg, bool update_x, bool update_s) {
    const std::size_t l = state.s_hat.rows();
    const std::size_t k = state.s_hat.cols();
    const std::size_t t = state.x_hat.cols();

    // r: pseudo-data for x.
    for (std::size_t kk = 0; kk < k; ++kk) {
        for (std::size_t tt = 0; tt < t; ++tt) {
            double prec = 0.0;
            double var_weight = 0.0;
            cplx acc(0.0, 0.0);
            for (std::size_t j = 0; j < l; ++j) {
                const double vg = state.v_gamma(j, tt);
                // Second-moment precision keeps the pseudo-data informative
                // while the means are still small.
                prec += (std::norm(state.s_hat(j, kk)) + state.v_s(j, kk)) * vg;
                var_weight += state.v_s(j, kk) * vg;
                acc += std::conj(state.s_hat(j, kk)) * state.gamma_hat(j, tt);
            }
            const double vr = clamp_var(prec > 0.0 ? 1.0 / prec : cfg.variance_ceiling, cfg,
                                        state.clamp_events);
            state.v_r(kk, tt) = vr;
            state.r_hat(kk, tt) = (1.0 - vr * var_weight) * state.x_hat(kk, tt) + vr * acc;
        }
    }

    // q: pseudo-data for s.
    for (std::size_t j = 0; j < l; ++j) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            double prec = 0.0;
            double var_weight = 0.0;
            cplx acc(0.0, 0.0);
            for (std::size_t tt = 0; tt < t; ++tt) {
                const double vg = state.v_gamma(j, tt);
                prec += (std::norm(state.x_hat(kk, tt)) + state.v_x(kk, tt)) * vg;
                var_weight += state.v_x(kk, tt) * vg;
                acc += std::conj(state.x_hat(kk, tt)) * state.gamma_hat(j, tt);
            }
            const double vq = clamp_var(prec > 0.0 ? 1.0 / prec : cfg.variance_ceiling, cfg,
                                        state.clamp_events);
            state.v_q(j, kk) = vq;
            state.q_hat(j, kk) = (1.0 - vq * var_weight) * state.s_hat(j, kk) + vq * acc;
        }
    }

    // Posterior moments (damped).
    if (update_x) {
        ComplexMatrix x_new(k, t);
        RealMatrix v_x_new(k, t);
        for (std::size_t kk = 0; kk < k; ++kk) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                cplx m;
                double v;
                prior.posterior(state.r_hat(kk, tt), state.v_r(kk, tt), m, v);
                x_new(kk, tt) = m;
                v_x_new(kk, tt) = v;
            }
        }
        damp_into(state.x_hat, x_new, rho);
        damp_into(state.v_x, v_x_new, rho);
        for (double& v : state.v_x.data()) v = clamp_var(v, cfg, state.clamp_events);
    }

    if (update_s) {
        ComplexMatrix s_new(l, k);
        RealMatrix v_s_new(l, k);
        for (std::size_t j = 0; j < l; ++j) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                const auto post = spike_slab_posterior(state.q_hat(j, kk), state.v_q(j, kk),
                                                       msgs.active_prob(j, kk),
                                                       msgs.slab_var(j, kk));
                s_new(j, kk) = post.mean;
                v_s_new(j, kk) = post.var;
            }
        }
        damp_into(state.s_hat, s_new, rho);
        damp_into(state.v_s, v_s_new, rho);
        for (double& v : state.v_s.data()) v = clamp_var(v, cfg, state.clamp_events);
    }
}

namespace {

// Rebalance users whose posterior signal power drifted outside the guard
// band: x-row divided by c, matching s-column multiplied by c. The bilinear
// product is unchanged; only the scale split moves back to the prior anchor.
void rebalance_scales(AmfState& state, double prior_var, const AmfConfig& cfg) {
    if (cfg.scale_guard <= 1.0) return;
    const std::size_t k_users = state.x_hat.rows();
    const std::size_t t_len = state.x_hat.cols();
    const std::size_t l_pts = state.s_hat.rows();
    for (std::size_t k = 0; k < k_users; ++k) {
        double power = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            power += std::norm(state.x_hat(k, t)) + state.v_x(k, t);
        }
        power /= static_cast<double>(t_len) * prior_var;
        if (!(power > cfg.scale_guard || power < 1.0 / cfg.scale_guard)) continue;
        double c = std::sqrt(power);
        if (!(c > 0.0) || !std::isfinite(c)) continue;
        c = std::clamp(c, 0.1, 10.0);  // bounded correction per iteration
        for (std::size_t t = 0; t < t_len; ++t) {
            state.x_hat(k, t) /= c;
            state.v_x(k, t) /= c * c;
        }
        // Variances of s are left to re-equilibrate through the recursion.
        for (std::size_t l = 0; l < l_pts; ++l) state.s_hat(l, k) *= c;
    }
}

}  // namespace

AmfRunInfo run_amf(AmfState& state, const ComplexMatrix& A, const ComplexMatrix& Y,
                   double noise_var, const SignalPrior& prior, const SPriorMsgs& msgs,
                   const AmfConfig& cfg, std::ostream* diagnostics) {
    AmfRunInfo info;
    double rho = state.rho_carry > 0.0 ? state.rho_carry : cfg.damping.initial;

    // The recursion is not a descent method: the residual may rise
    // transiently, and on hard instances the trajectory can drift off after
    // passing a good region. The loop therefore keeps the best-fit state seen
    // so far and hands that back.
    // The data fit is scored through the factor product rather than the w
    // messages: when A has near-orthogonal columns the w fit is trivially
    // good regardless of whether the factors have locked in.
    const auto factored_residual = [&]() {
        return frobenius_norm(subtract(Y, matmul(A, matmul(state.s_hat, state.x_hat))));
    };
    AmfState best = state;
    double best_residual = factored_residual();
    double best_rho = rho;
    double prev_residual = best_residual;

    for (int iter = 1; iter <= cfg.max_inner_iters; ++iter) {
        const ComplexMatrix x_prev = state.x_hat;
        const bool frozen_x = iter <= cfg.x_freeze_iters;
        // A fresh state has no history to damp against; take one full step.
        const double rho_eff = !state.bootstrapped ? 1.0 : (frozen_x ? cfg.freeze_rho : rho);

        output_half_step(state, A, Y, noise_var, rho_eff, cfg);
        central_half_step(state, rho_eff, cfg);
        update_w_messages(state, rho_eff, cfg);
        input_half_step(state, prior, msgs, rho_eff, cfg, !frozen_x, true);
        if (!frozen_x) rebalance_scales(state, prior.variance(), cfg);

        if (!state.core_finite()) {
            if (!state.bootstrapped) {
                throw std::runtime_error("run_amf: non-finite state at inner iteration " +
                                         std::to_string(iter));
            }
            break;  // trajectory ran off; fall back to the best state
        }
        state.bootstrapped = true;

        const double residual = factored_residual();
        if (residual > prev_residual) {
            rho = std::max(rho * cfg.damping.shrink, cfg.damping.min_factor);
        } else {
            rho = std::min(rho * cfg.damping.grow, cfg.damping.max_factor);
        }
        prev_residual = residual;

        if (residual < best_residual || iter == 1) {
            best_residual = residual;
            best = state;
            best_rho = rho;
        } else if (residual > 100.0 * best_residual && iter > 20) {
            break;  // trajectory has left the basin; keep the best state
        }

        if (diagnostics) {
            (*diagnostics) << iter << ',' << residual << ',' << rho << ','
                           << state.clamp_events << '\n';
        }

        info.iterations = iter;
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < state.x_hat.size(); ++i) {
            num += std::norm(state.x_hat.data()[i] - x_prev.data()[i]);
            den += std::norm(x_prev.data()[i]);
        }
        const double rel = den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? INFINITY : 0.0);
        // Damping scales the per-iteration movement; compare the
        // undamped-equivalent change against the tolerance. Frozen-x warm-up
        // iterations never trigger the stop rule.
        if (!frozen_x && rel <= cfg.stop_tol * rho_eff) {
            info.converged = true;
            break;
        }
    }

    state = std::move(best);
    state.bootstrapped = true;
    state.rho_carry = best_rho;
    info.residual = best_residual;
    info.rho = best_rho;
    return info;
}

}  // namespace aemmp
