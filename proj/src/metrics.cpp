// SPDX-License-Identifier: Apache-2.0

#include "aemmp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace aemmp {

namespace {

// Sum over users of log2(1 + ||x_k||^2 / ||x_k - x_hat_k||^2), capped.
double sum_log_terms(const ComplexMatrix& X_true, const ComplexMatrix& X_hat) {
    double acc = 0.0;
    for (std::size_t k = 0; k < X_true.rows(); ++k) {
        double sig = 0.0;
        double err = 0.0;
        for (std::size_t t = 0; t < X_true.cols(); ++t) {
            sig += std::norm(X_true(k, t));
            err += std::norm(X_true(k, t) - X_hat(k, t));
        }
        double term = kRateLogCap;
        if (err > 0.0) term = std::min(std::log2(1.0 + sig / err), kRateLogCap);
        acc += term;
    }
    return acc;
}

}  // namespace

double nmse(const ComplexMatrix& est, const ComplexMatrix& truth) {
    if (!est.same_shape(truth)) throw std::invalid_argument("nmse: shape mismatch");
    const double den = frobenius_norm(truth);
    if (den == 0.0) throw std::invalid_argument("nmse: zero reference");
    const double num = frobenius_norm(subtract(est, truth));
    return (num * num) / (den * den);
}

double rate_blind(const ComplexMatrix& X_true, const ComplexMatrix& X_hat) {
    if (!X_true.same_shape(X_hat)) throw std::invalid_argument("rate_blind: shape mismatch");
    const double t_len = static_cast<double>(X_true.cols());
    const double k_users = static_cast<double>(X_true.rows());
    const double label_bits = k_users * std::ceil(std::log2(k_users));
    return (1.0 - 1.0 / t_len) * sum_log_terms(X_true, X_hat) - label_bits / t_len;
}

double rate_training(const ComplexMatrix& X_true, const ComplexMatrix& X_hat, int t_train) {
    if (!X_true.same_shape(X_hat)) throw std::invalid_argument("rate_training: shape mismatch");
    if (t_train < 0 || static_cast<std::size_t>(t_train) >= X_true.cols()) {
        throw std::invalid_argument("rate_training: t_train must be < T");
    }
    const double t_len = static_cast<double>(X_true.cols());
    return (1.0 - static_cast<double>(t_train) / t_len) * sum_log_terms(X_true, X_hat);
}

}  // namespace aemmp
