// SPDX-License-Identifier: Apache-2.0

#include "aemmp/complex_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aemmp {

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = cplx(1.0, 0.0);
    return m;
}

bool ComplexMatrix::is_finite() const {
    for (const cplx& v : data_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

bool RealMatrix::is_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions do not match");
    }
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const cplx aij = a(i, j);
            if (aij == cplx(0.0, 0.0)) continue;
            for (std::size_t k = 0; k < b.cols(); ++k) {
                out(i, k) += aij * b(j, k);
            }
        }
    }
    return out;
}

ComplexMatrix hermitian(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out(j, i) = std::conj(a(i, j));
        }
    }
    return out;
}

ComplexMatrix add(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    ComplexMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

ComplexMatrix subtract(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("subtract: shape mismatch");
    ComplexMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

ComplexMatrix scale(const ComplexMatrix& a, cplx factor) {
    ComplexMatrix out = a;
    for (cplx& v : out.data()) v *= factor;
    return out;
}

double frobenius_norm(const ComplexMatrix& a) {
    double acc = 0.0;
    for (const cplx& v : a.data()) acc += std::norm(v);
    return std::sqrt(acc);
}

double rel_frobenius_error(const ComplexMatrix& a, const ComplexMatrix& b) {
    const double den = frobenius_norm(b);
    const double num = frobenius_norm(subtract(a, b));
    if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
    return num / den;
}

namespace {

// Cyclic Jacobi diagonalization of a Hermitian matrix. On return g is
// (numerically) diagonal and v holds the accumulated eigenvectors as columns.
void jacobi_hermitian(ComplexMatrix& g, ComplexMatrix& v) {
    const std::size_t n = g.rows();
    v = ComplexMatrix::identity(n);
    if (n < 2) return;

    double total = 0.0;
    for (const cplx& e : g.data()) total += std::norm(e);
    if (total == 0.0) return;
    const double stop = 1e-28 * total;

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += std::norm(g(p, q));
        }
        if (2.0 * off <= stop) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx b = g(p, q);
                const double babs = std::abs(b);
                if (babs == 0.0) continue;
                const double app = g(p, p).real();
                const double aqq = g(q, q).real();

                // Unitary plane rotation J = diag(1, e^{-i phi}) * R(theta)
                // chosen to zero the (p,q) entry of J^H G J.
                const cplx phase = b / babs;
                const double theta = 0.5 * std::atan2(2.0 * babs, aqq - app);
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                const cplx jpq = s;                     // J(p,q)
                const cplx jqp = -s * std::conj(phase); // J(q,p)
                const cplx jqq = c * std::conj(phase);  // J(q,q)

                // Columns: G <- G J.
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx gp = g(r, p);
                    const cplx gq = g(r, q);
                    g(r, p) = gp * c + gq * jqp;
                    g(r, q) = gp * jpq + gq * jqq;
                }
                // Rows: G <- J^H G.
                for (std::size_t col = 0; col < n; ++col) {
                    const cplx gp = g(p, col);
                    const cplx gq = g(q, col);
                    g(p, col) = gp * c + gq * std::conj(jqp);
                    g(q, col) = gp * std::conj(jpq) + gq * std::conj(jqq);
                }
                g(p, q) = cplx(0.0, 0.0);
                g(q, p) = cplx(0.0, 0.0);
                g(p, p) = cplx(g(p, p).real(), 0.0);
                g(q, q) = cplx(g(q, q).real(), 0.0);

                // Accumulate V <- V J.
                for (std::size_t r = 0; r < n; ++r) {
                    const cplx vp = v(r, p);
                    const cplx vq = v(r, q);
                    v(r, p) = vp * c + vq * jqp;
                    v(r, q) = vp * jpq + vq * jqq;
                }
            }
        }
    }
}

}  // namespace

ComplexMatrix right_singular_block(const ComplexMatrix& y, std::size_t k) {
    const std::size_t n = y.rows();
    const std::size_t t = y.cols();
    if (k < 1 || k > std::min(n, t)) {
        throw std::invalid_argument("right_singular_block: k out of range");
    }

    // Gram matrix y^H y; its eigenvectors are the right singular vectors.
    ComplexMatrix g(t, t);
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = i; j < t; ++j) {
            cplx acc(0.0, 0.0);
            for (std::size_t r = 0; r < n; ++r) acc += std::conj(y(r, i)) * y(r, j);
            g(i, j) = acc;
            g(j, i) = std::conj(acc);
        }
    }

    ComplexMatrix v;
    jacobi_hermitian(g, v);

    std::vector<std::size_t> order(t);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return g(a, a).real() > g(b, b).real();
    });

    ComplexMatrix v1(t, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t r = 0; r < t; ++r) v1(r, j) = v(r, order[j]);
    }
    return v1;
}

}  // namespace aemmp
