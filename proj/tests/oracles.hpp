// SPDX-License-Identifier: Apache-2.0
//
// Test-only reference implementations, independent of the library's
// computation paths.

#ifndef AEMMP_TESTS_ORACLES_HPP
#define AEMMP_TESTS_ORACLES_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "aemmp/complex_matrix.hpp"
#include "aemmp/priors.hpp"

namespace aemmp::oracles {

// Naive triple-loop product.
inline ComplexMatrix matmul_naive(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < b.cols(); ++k) {
            cplx acc(0.0, 0.0);
            for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * b(j, k);
            out(i, k) = acc;
        }
    }
    return out;
}

inline Eigen::MatrixXcd to_eigen(const ComplexMatrix& m) {
    Eigen::MatrixXcd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    }
    return out;
}

// Best rank-k approximation from a full Jacobi SVD.
inline ComplexMatrix best_rank_k(const ComplexMatrix& y, int k) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(y),
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXcd approx = Eigen::MatrixXcd::Zero(y.rows(), y.cols());
    for (int i = 0; i < k; ++i) {
        approx += svd.singularValues()(i) * svd.matrixU().col(i) *
                  svd.matrixV().col(i).adjoint();
    }
    ComplexMatrix out(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.rows(); ++i) {
        for (std::size_t j = 0; j < y.cols(); ++j) out(i, j) = approx(i, j);
    }
    return out;
}

// Central finite difference.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Composite Simpson quadrature on [lo, hi].
inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      int intervals = 4000) {
    if (intervals % 2) ++intervals;
    const double h = (hi - lo) / intervals;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i) {
        acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

inline double gauss_pdf(double x, double mean, double var) {
    return std::exp(-(x - mean) * (x - mean) / (2.0 * var)) /
           std::sqrt(2.0 * std::numbers::pi * var);
}

// Moments of the scalar posterior  CN(s; q, vq) * [w CN(s; 0, phi) +
// (1-w) delta(s)]  by separable real/imaginary quadrature.
struct QuadPosterior {
    cplx mean;
    double var = 0.0;
    double eta = 0.0;
};

inline QuadPosterior spike_slab_quadrature(cplx q, double vq, double active_prob,
                                           double phi) {
    // Per-axis products of two real Gaussians (each complex Gaussian factors
    // into independent real/imag parts with half the variance).
    auto axis = [&](double q_axis) {
        const double nu_half = 0.5 * phi * vq / (phi + vq);
        const double chi = q_axis * phi / (phi + vq);
        const double lo = chi - 14.0 * std::sqrt(nu_half);
        const double hi = chi + 14.0 * std::sqrt(nu_half);
        auto ff = [&](double s) {
            return gauss_pdf(s, q_axis, 0.5 * vq) * gauss_pdf(s, 0.0, 0.5 * phi);
        };
        struct {
            double z, m1, m2;
        } r{};
        r.z = simpson(ff, lo, hi);
        r.m1 = simpson([&](double s) { return s * ff(s); }, lo, hi);
        r.m2 = simpson([&](double s) { return s * s * ff(s); }, lo, hi);
        return r;
    };

    const auto re = axis(q.real());
    const auto im = axis(q.imag());

    const double z_slab = active_prob * re.z * im.z;
    const double spike_like =
        gauss_pdf(q.real(), 0.0, 0.5 * vq) * gauss_pdf(q.imag(), 0.0, 0.5 * vq);
    const double z_spike = (1.0 - active_prob) * spike_like;

    QuadPosterior post;
    post.eta = z_slab / (z_slab + z_spike);
    const cplx slab_mean(re.m1 / re.z, im.m1 / im.z);
    const double slab_m2 = re.m2 / re.z + im.m2 / im.z;
    post.mean = post.eta * slab_mean;
    post.var = post.eta * slab_m2 - std::norm(post.mean);
    return post;
}

// Exact enumeration of a two-state chain with Bernoulli evidence; L <= ~20.
struct ChainEnumeration {
    std::vector<double> single;    // P(c_l = 1)
    std::vector<double> pairwise;  // P(c_l = 1, c_{l+1} = 1)
};

inline ChainEnumeration enumerate_chain(double lambda, double p01,
                                        const std::vector<double>& evidence) {
    const std::size_t l_pts = evidence.size();
    const double p10 = p01 * lambda / (1.0 - lambda);
    ChainEnumeration out;
    out.single.assign(l_pts, 0.0);
    out.pairwise.assign(l_pts - 1, 0.0);
    double z = 0.0;
    for (std::size_t mask = 0; mask < (1ull << l_pts); ++mask) {
        double w = (mask & 1) ? lambda : 1.0 - lambda;
        for (std::size_t l = 1; l < l_pts; ++l) {
            const bool prev = mask & (1ull << (l - 1));
            const bool cur = mask & (1ull << l);
            w *= prev ? (cur ? 1.0 - p01 : p01) : (cur ? p10 : 1.0 - p10);
        }
        for (std::size_t l = 0; l < l_pts; ++l) {
            w *= (mask & (1ull << l)) ? evidence[l] : 1.0 - evidence[l];
        }
        z += w;
        for (std::size_t l = 0; l < l_pts; ++l) {
            if (mask & (1ull << l)) out.single[l] += w;
            if (l + 1 < l_pts && (mask & (1ull << l)) && (mask & (1ull << (l + 1)))) {
                out.pairwise[l] += w;
            }
        }
    }
    for (double& v : out.single) v /= z;
    for (double& v : out.pairwise) v /= z;
    return out;
}

// Golden-section maximizer of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         int iters = 200) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Coarse grid search refined around the best cell.
inline double grid_max(const std::function<double(double)>& f, double lo, double hi,
                       int points = 20001) {
    double best_x = lo;
    double best_f = f(lo);
    const double step = (hi - lo) / (points - 1);
    for (int i = 1; i < points; ++i) {
        const double x = lo + i * step;
        const double v = f(x);
        if (v > best_f) {
            best_f = v;
            best_x = x;
        }
    }
    const double a = std::max(lo, best_x - step);
    const double b = std::min(hi, best_x + step);
    return golden_max(f, a, b, 120);
}

}  // namespace aemmp::oracles

#endif
