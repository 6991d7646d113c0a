// SPDX-License-Identifier: Apache-2.0

#include "aemmp/em_mstep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aemmp {

MStepScratch compute_mstep_scratch(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                                   const RealMatrix& pi_in, const RealMatrix& pi_out,
                                   const std::vector<double>& varphi) {
    const std::size_t l_pts = q_hat.rows();
    const std::size_t k_users = q_hat.cols();
    if (varphi.size() != k_users) {
        throw std::invalid_argument("compute_mstep_scratch: varphi length mismatch");
    }
    MStepScratch s;
    s.eta = RealMatrix(l_pts, k_users);
    s.nu = RealMatrix(l_pts, k_users);
    s.chi = ComplexMatrix(l_pts, k_users);
    for (std::size_t l = 0; l < l_pts; ++l) {
        for (std::size_t k = 0; k < k_users; ++k) {
            const double phi = varphi[k];
            const double vq = v_q(l, k);
            const double on = pi_out(l, k) * pi_in(l, k);
            const double off = (1.0 - pi_out(l, k)) * (1.0 - pi_in(l, k));
            s.eta(l, k) = on / (on + off);
            s.nu(l, k) = phi * vq / (phi + vq);
            s.chi(l, k) = q_hat(l, k) * (phi / (phi + vq));
        }
    }
    return s;
}

double update_sigma2(const ComplexMatrix& Y, const ComplexMatrix& z_hat,
                     const RealMatrix& v_z) {
    if (!Y.same_shape(z_hat) || Y.rows() != v_z.rows() || Y.cols() != v_z.cols()) {
        throw std::invalid_argument("update_sigma2: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        acc += std::norm(Y.data()[i] - z_hat.data()[i]) + v_z.data()[i];
    }
    return std::max(acc / static_cast<double>(Y.size()), kSigma2Floor);
}

std::vector<double> update_varphi(const MStepScratch& scratch,
                                  const std::vector<double>& varphi_old) {
    const std::size_t l_pts = scratch.eta.rows();
    const std::size_t k_users = scratch.eta.cols();
    std::vector<double> out = varphi_old;
    for (std::size_t k = 0; k < k_users; ++k) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t l = 0; l < l_pts; ++l) {
            const double e = scratch.eta(l, k);
            num += e * (std::norm(scratch.chi(l, k)) + scratch.nu(l, k));
            den += e;
        }
        if (den > 0.0) out[k] = std::max(num / den, kVarphiFloor);
    }
    return out;
}

std::vector<double> update_varphi(const ComplexMatrix& q_hat, const RealMatrix& v_q,
                                  const RealMatrix& pi_in, const RealMatrix& pi_out,
                                  const std::vector<double>& varphi_old) {
    return update_varphi(compute_mstep_scratch(q_hat, v_q, pi_in, pi_out, varphi_old),
                         varphi_old);
}

double update_p01(const RealMatrix& pairwise, const RealMatrix& omega, double p01_old) {
    if (pairwise.rows() + 1 != omega.rows() || pairwise.cols() != omega.cols()) {
        throw std::invalid_argument("update_p01: shape mismatch");
    }
    double stay = 0.0;
    double active = 0.0;
    for (std::size_t l = 0; l + 1 < omega.rows(); ++l) {
        for (std::size_t k = 0; k < omega.cols(); ++k) {
            stay += pairwise(l, k);
            active += omega(l, k);
        }
    }
    if (active <= 0.0) return p01_old;
    return clamp_prob(1.0 - stay / active, kHyperProbEps);
}

double update_lambda(const RealMatrix& omega) {
    double acc = 0.0;
    for (std::size_t k = 0; k < omega.cols(); ++k) acc += omega(0, k);
    return clamp_prob(acc / static_cast<double>(omega.cols()), kHyperProbEps);
}

namespace {

ComplexMatrix grid_response_with(const AngleTuneContext& ctx, const AngleGrid& grid,
                                 std::size_t l, double theta) {
    AngleGrid g = grid;
    g.azimuth[l] = theta;
    return response_matrix(ctx.geom, g);
}

}  // namespace

double angle_objective(const AngleTuneContext& ctx, const AngleGrid& grid, std::size_t l,
                       double theta) {
    const ComplexMatrix a = grid_response_with(ctx, grid, l, theta);
    const ComplexMatrix resid = subtract(ctx.Y, matmul(a, ctx.w_hat));
    double fit = 0.0;
    for (const cplx& v : resid.data()) fit += std::norm(v);

    double var_term = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double col_norm2 = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) col_norm2 += std::norm(a(i, j));
        double vw_sum = 0.0;
        for (std::size_t t = 0; t < ctx.v_w.cols(); ++t) vw_sum += ctx.v_w(j, t);
        var_term += vw_sum * col_norm2;
    }
    return -(fit + var_term) / ctx.sigma2;
}

double angle_gradient(const AngleTuneContext& ctx, const AngleGrid& grid, std::size_t l,
                      double theta) {
    const std::size_t n = ctx.Y.rows();
    const std::size_t t = ctx.Y.cols();

    // Residual with column l removed: y_t - sum_{l' != l} w_{l't} a_{l'}.
    ComplexMatrix y_minus = ctx.Y;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (j == l) continue;
        const ComplexMatrix a_j = steering_vector(ctx.geom, grid.azimuth[j]);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t tt = 0; tt < t; ++tt) {
                y_minus(i, tt) -= ctx.w_hat(j, tt) * a_j(i, 0);
            }
        }
    }

    const ComplexMatrix a_l = steering_vector(ctx.geom, theta);
    const ComplexMatrix da = steering_derivative(ctx.geom, theta);

    // sum_t w*_{lt} y_{t,-l} as an antenna-domain vector.
    std::vector<cplx> g(n, cplx(0.0, 0.0));
    for (std::size_t tt = 0; tt < t; ++tt) {
        const cplx w_conj = std::conj(ctx.w_hat(l, tt));
        for (std::size_t i = 0; i < n; ++i) g[i] += w_conj * y_minus(i, tt);
    }

    double power = 0.0;
    for (std::size_t tt = 0; tt < t; ++tt) {
        power += ctx.v_w(l, tt) + std::norm(ctx.w_hat(l, tt));
    }

    cplx da_dot_g(0.0, 0.0);
    cplx da_dot_a(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        da_dot_g += std::conj(da(i, 0)) * g[i];
        da_dot_a += std::conj(da(i, 0)) * a_l(i, 0);
    }
    return 2.0 / ctx.sigma2 * (da_dot_g - da_dot_a * power).real();
}

AngleGrid tune_grid(const AngleGrid& grid, const AngleTuneContext& ctx,
                    const AngleTuneConfig& cfg) {
    if (!is_one_dimensional(ctx.geom)) {
        throw std::invalid_argument("tune_grid: 1-D geometry required");
    }
    if (cfg.step_integer_t < 1) throw std::invalid_argument("tune_grid: t must be >= 1");
    AngleGrid out = grid;
    if (cfg.updates_per_em_iter < 1 || grid.size() == 0) return out;

    const std::size_t l_pts = grid.size();
    const std::size_t n = ctx.Y.rows();
    const std::size_t t = ctx.Y.cols();
    const double eps = std::numbers::pi / (2.0 * cfg.step_integer_t * static_cast<double>(l_pts));
    const double limit = azimuth_limit(ctx.geom) - 1e-9;

    ComplexMatrix a = response_matrix(ctx.geom, out);
    ComplexMatrix resid = subtract(ctx.Y, matmul(a, ctx.w_hat));

    for (int sweep = 0; sweep < cfg.updates_per_em_iter; ++sweep) {
        for (std::size_t l = 0; l < l_pts; ++l) {
            const ComplexMatrix da = steering_derivative(ctx.geom, out.azimuth[l]);

            // y_{t,-l} = resid column + a_l * w_{lt}; accumulate sum_t w* y.
            std::vector<cplx> g(n, cplx(0.0, 0.0));
            double power = 0.0;
            for (std::size_t tt = 0; tt < t; ++tt) {
                const cplx w = ctx.w_hat(l, tt);
                const cplx w_conj = std::conj(w);
                for (std::size_t i = 0; i < n; ++i) {
                    g[i] += w_conj * (resid(i, tt) + a(i, l) * w);
                }
                power += ctx.v_w(l, tt) + std::norm(w);
            }
            cplx da_dot_g(0.0, 0.0);
            cplx da_dot_a(0.0, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                da_dot_g += std::conj(da(i, 0)) * g[i];
                da_dot_a += std::conj(da(i, 0)) * a(i, l);
            }
            const double grad = 2.0 / ctx.sigma2 * (da_dot_g - da_dot_a * power).real();
            if (grad == 0.0) continue;

            const double theta_new =
                std::clamp(out.azimuth[l] + (grad > 0.0 ? eps : -eps), -limit, limit);
            if (theta_new == out.azimuth[l]) continue;

            const ComplexMatrix a_new = steering_vector(ctx.geom, theta_new);
            for (std::size_t tt = 0; tt < t; ++tt) {
                const cplx w = ctx.w_hat(l, tt);
                if (w == cplx(0.0, 0.0)) continue;
                for (std::size_t i = 0; i < n; ++i) {
                    resid(i, tt) += (a(i, l) - a_new(i, 0)) * w;
                }
            }
            for (std::size_t i = 0; i < n; ++i) a(i, l) = a_new(i, 0);
            out.azimuth[l] = theta_new;
        }
    }
    return out;
}

}  // namespace aemmp
