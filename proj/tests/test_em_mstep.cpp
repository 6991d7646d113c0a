// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aemmp/em_mstep.hpp"
#include "aemmp/mc_support.hpp"
#include "test_helpers.hpp"
#include "oracles.hpp"

using namespace aemmp;

namespace {
constexpr double kPi = std::numbers::pi;

// Random consistent chain posterior for the p01/lambda oracles.
struct ChainPosterior {
    RealMatrix omega;
    RealMatrix pairwise;
};

ChainPosterior random_chain_posterior(std::size_t l_pts, std::size_t k_users, Rng& rng,
                                      double lambda, double p01) {
    RealMatrix pi_out(l_pts, k_users);
    for (double& v : pi_out.data()) v = rng.uniform(0.05, 0.95);
    RealMatrix fwd;
    RealMatrix bwd;
    forward_backward(pi_out, lambda, p01, fwd, bwd);
    ChainPosterior post;
    post.omega = compute_omega(fwd, bwd, pi_out);
    post.pairwise = pairwise_posterior(fwd, bwd, pi_out, lambda, p01);
    return post;
}

}  // namespace

TEST_CASE("update_sigma2 substitution examples") {
    ComplexMatrix y(1, 1);
    y(0, 0) = cplx(2.0, 1.0);
    ComplexMatrix z = y;
    RealMatrix vz(1, 1, 0.0);
    CHECK(update_sigma2(y, z, vz) == kSigma2Floor);

    z(0, 0) = y(0, 0) - cplx(1.0, 1.0);  // |y - z|^2 = 2
    vz(0, 0) = 1.0;
    CHECK(update_sigma2(y, z, vz) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("update_sigma2 maximizes the expected log-likelihood") {
    Rng rng(71);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 3 + rng.next_u64() % 4;
        const std::size_t t = 2 + rng.next_u64() % 4;
        const ComplexMatrix y = testing::random_matrix(n, t, rng);
        const ComplexMatrix z = testing::random_matrix(n, t, rng);
        const RealMatrix vz = testing::random_positive(n, t, rng, 0.01, 1.0);

        const double updated = update_sigma2(y, z, vz);
        double c = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            c += std::norm(y.data()[i] - z.data()[i]) + vz.data()[i];
        }
        const double nt = static_cast<double>(n * t);
        auto objective = [&](double v) { return -nt * std::log(v) - c / v; };
        const double opt = oracles::golden_max(objective, 1e-6, 100.0);
        CHECK(std::abs(updated - opt) <= 1e-8 * std::max(1.0, opt));
    }
}

TEST_CASE("update_varphi closed forms") {
    // eta = 1 everywhere, chi = 0, nu = 2  =>  varphi = 2.
    MStepScratch s;
    s.eta = RealMatrix(3, 1, 1.0);
    s.nu = RealMatrix(3, 1, 2.0);
    s.chi = ComplexMatrix(3, 1);
    CHECK(update_varphi(s, {7.0})[0] == doctest::Approx(2.0).epsilon(1e-14));

    // Single active point with |chi|^2 = 3, nu = 1 => varphi = 4.
    s.eta = RealMatrix(3, 1, 0.0);
    s.eta(1, 0) = 1.0;
    s.nu = RealMatrix(3, 1, 1.0);
    s.chi = ComplexMatrix(3, 1);
    s.chi(1, 0) = cplx(std::sqrt(3.0), 0.0);
    CHECK(update_varphi(s, {7.0})[0] == doctest::Approx(4.0).epsilon(1e-12));

    // No activity: keep the old value.
    s.eta = RealMatrix(3, 1, 0.0);
    CHECK(update_varphi(s, {7.0})[0] == 7.0);
}

TEST_CASE("update_varphi is a stationary point of its objective") {
    Rng rng(72);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t l_pts = 12;
        const ComplexMatrix q = testing::random_matrix(l_pts, 1, rng);
        const RealMatrix vq = testing::random_positive(l_pts, 1, rng, 0.05, 1.0);
        RealMatrix pi_in(l_pts, 1);
        RealMatrix pi_out(l_pts, 1);
        for (std::size_t l = 0; l < l_pts; ++l) {
            pi_in(l, 0) = rng.uniform(0.1, 0.9);
            pi_out(l, 0) = rng.uniform(0.1, 0.9);
        }
        const std::vector<double> old{rng.uniform(0.3, 2.0)};
        const double updated = update_varphi(q, vq, pi_in, pi_out, old)[0];

        const MStepScratch scratch = compute_mstep_scratch(q, vq, pi_in, pi_out, old);
        auto objective = [&](double phi) {
            double acc = 0.0;
            for (std::size_t l = 0; l < l_pts; ++l) {
                acc += scratch.eta(l, 0) *
                       (-std::log(phi) -
                        (std::norm(scratch.chi(l, 0)) + scratch.nu(l, 0)) / phi);
            }
            return acc;
        };
        const double opt = oracles::golden_max(objective, 1e-6, 50.0);
        CHECK(std::abs(updated - opt) <= 1e-6 * std::max(1.0, opt));
        // Derivative vanishes at the update.
        const double fd = oracles::central_diff(objective, updated, 1e-7);
        CHECK(std::abs(fd) < 1e-5);
    }
}

TEST_CASE("update_p01 limits and oracle") {
    RealMatrix omega(4, 1, 0.5);
    RealMatrix pairwise(3, 1, 0.5);
    CHECK(update_p01(pairwise, omega, 0.3) == kHyperProbEps);  // never leaves

    RealMatrix zero(3, 1, 0.0);
    CHECK(update_p01(zero, omega, 0.3) == 1.0 - kHyperProbEps);  // always leaves

    RealMatrix no_mass(4, 1, 0.0);
    CHECK(update_p01(pairwise, no_mass, 0.3) == 0.3);

    Rng rng(73);
    for (int rep = 0; rep < 10; ++rep) {
        const auto post = random_chain_posterior(8, 2, rng, 0.35, 0.3);
        const double updated = update_p01(post.pairwise, post.omega, 0.5);
        auto objective = [&](double p) {
            double acc = 0.0;
            for (std::size_t l = 0; l + 1 < post.omega.rows(); ++l) {
                for (std::size_t k = 0; k < post.omega.cols(); ++k) {
                    const double stay = post.pairwise(l, k);
                    const double active = post.omega(l, k);
                    acc += (active - stay) * std::log(p) + stay * std::log(1.0 - p);
                }
            }
            return acc;
        };
        const double opt = oracles::grid_max(objective, 1e-6, 1.0 - 1e-6);
        CHECK(std::abs(updated - opt) <= 1e-4);
    }
}

TEST_CASE("update_lambda mean and oracle") {
    RealMatrix omega(3, 2);
    omega(0, 0) = 0.2;
    omega(0, 1) = 0.4;
    CHECK(update_lambda(omega) == doctest::Approx(0.3).epsilon(1e-14));

    RealMatrix ones(2, 3, 1.0);
    CHECK(update_lambda(ones) == 1.0 - kHyperProbEps);

    Rng rng(74);
    for (int rep = 0; rep < 10; ++rep) {
        RealMatrix w(5, 4);
        for (double& v : w.data()) v = rng.uniform(0.02, 0.98);
        const double updated = update_lambda(w);
        auto objective = [&](double lam) {
            double acc = 0.0;
            for (std::size_t k = 0; k < w.cols(); ++k) {
                acc += w(0, k) * std::log(lam) + (1.0 - w(0, k)) * std::log(1.0 - lam);
            }
            return acc;
        };
        const double opt = oracles::golden_max(objective, 1e-6, 1.0 - 1e-6);
        CHECK(std::abs(updated - opt) <= 1e-6);
    }
}

TEST_CASE("angle_objective: perfect fit and local maximum at the truth") {
    const ArrayGeometry geom = Ula{16, 0.5};
    AngleGrid grid = AngleGrid::uniform(4, kPi / 2.0);
    const double truth = grid.azimuth[2];

    Rng rng(75);
    ComplexMatrix w_hat(4, 6);
    for (std::size_t t = 0; t < 6; ++t) {
        w_hat(2, t) = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
    }
    const RealMatrix v_w(4, 6, 0.0);
    const ComplexMatrix y = matmul(response_matrix(geom, grid), w_hat);
    const AngleTuneContext ctx{y, w_hat, v_w, geom, 1.0};

    const double at_truth = angle_objective(ctx, grid, 2, truth);
    CHECK(std::abs(at_truth) < 1e-20);
    for (double delta : {-0.1, -0.01, 0.01, 0.1}) {
        CHECK(angle_objective(ctx, grid, 2, truth + delta) < at_truth - 1e-12);
    }

    // Stationarity of the analytic gradient at the optimum.
    CHECK(std::abs(angle_gradient(ctx, grid, 2, truth)) < 1e-6 * frobenius_norm(y));
}

TEST_CASE("angle_objective locality: direct recomputation oracle") {
    const ArrayGeometry geom = Lens{8, 4.0};
    AngleGrid grid = AngleGrid::uniform(5, kPi / 2.0);
    Rng rng(76);
    const ComplexMatrix w_hat = testing::random_matrix(5, 3, rng);
    const RealMatrix v_w = testing::random_positive(5, 3, rng, 0.0, 0.5);
    const ComplexMatrix y = testing::random_matrix(8, 3, rng);
    const AngleTuneContext ctx{y, w_hat, v_w, geom, 0.7};

    const double theta = 0.33;
    const double got = angle_objective(ctx, grid, 1, theta);

    AngleGrid manual = grid;
    manual.azimuth[1] = theta;
    const ComplexMatrix a = response_matrix(geom, manual);
    double fit = 0.0;
    const ComplexMatrix resid = subtract(y, matmul(a, w_hat));
    for (const cplx& v : resid.data()) fit += std::norm(v);
    double var_term = 0.0;
    for (std::size_t l = 0; l < 5; ++l) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < 8; ++i) norm2 += std::norm(a(i, l));
        for (std::size_t t = 0; t < 3; ++t) var_term += v_w(l, t) * norm2;
    }
    CHECK(got == doctest::Approx(-(fit + var_term) / 0.7).epsilon(1e-12));
}

TEST_CASE("angle_gradient matches finite differences of the objective") {
    Rng rng(77);
    const ArrayGeometry geoms[] = {
        ArrayGeometry{Ula{12, 0.5}},
        ArrayGeometry{Lens{10, 5.0}},
        ArrayGeometry{ArbitraryLinear{{0.0, 0.45, 0.93, 1.35, 1.8, 2.2, 2.7}}},
    };
    int count = 0;
    for (const auto& geom : geoms) {
        const std::size_t n = static_cast<std::size_t>(antenna_count(geom));
        for (int rep = 0; rep < 12; ++rep) {
            const std::size_t l_pts = 3 + rng.next_u64() % 3;
            const std::size_t t_len = 2 + rng.next_u64() % 3;
            AngleGrid grid = AngleGrid::uniform(l_pts, kPi / 2.0);
            for (double& a : grid.azimuth) a += rng.uniform(-0.05, 0.05);
            const ComplexMatrix w_hat = testing::random_matrix(l_pts, t_len, rng);
            const RealMatrix v_w = testing::random_positive(l_pts, t_len, rng, 0.0, 1.0);
            const ComplexMatrix y = testing::random_matrix(n, t_len, rng);
            const AngleTuneContext ctx{y, w_hat, v_w, geom, 1.0};

            const std::size_t l = rng.next_u64() % l_pts;
            const double theta = rng.uniform(-1.3, 1.3);
            const double analytic = angle_gradient(ctx, grid, l, theta);
            const double fd = oracles::central_diff(
                [&](double th) { return angle_objective(ctx, grid, l, th); }, theta, 1e-6);
            CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(analytic)));
            ++count;
        }
    }
    CHECK(count == 36);
}

TEST_CASE("angle_gradient vanishes with zero posteriors") {
    const ArrayGeometry geom = Ula{8, 0.5};
    AngleGrid grid = AngleGrid::uniform(3, kPi / 2.0);
    Rng rng(78);
    const ComplexMatrix y = testing::random_matrix(8, 4, rng);
    const ComplexMatrix w_hat(3, 4);
    const RealMatrix v_w(3, 4, 0.0);
    const AngleTuneContext ctx{y, w_hat, v_w, geom, 1.0};
    CHECK(angle_gradient(ctx, grid, 1, 0.2) == 0.0);
}

TEST_CASE("tune_grid: exact step size, zero-gradient freeze, bounded travel") {
    const ArrayGeometry geom = Ula{16, 0.5};
    const std::size_t l_pts = 8;
    AngleGrid grid = AngleGrid::uniform(l_pts, kPi / 2.0);
    const double offset = 0.3 * kPi / static_cast<double>(l_pts);
    const double truth = grid.azimuth[4] + offset;

    Rng rng(79);
    ComplexMatrix w_hat(l_pts, 5);
    for (std::size_t t = 0; t < 5; ++t) {
        w_hat(4, t) = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
    }
    const RealMatrix v_w(l_pts, 5, 0.0);
    ComplexMatrix y(16, 5);
    const ComplexMatrix a_true = steering_vector(geom, truth);
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t i = 0; i < 16; ++i) y(i, t) = a_true(i, 0) * w_hat(4, t);
    }
    const AngleTuneContext ctx{y, w_hat, v_w, geom, 1e-6};

    AngleTuneConfig cfg;
    cfg.step_integer_t = 4;
    cfg.updates_per_em_iter = 1;
    const double eps = kPi / (2.0 * cfg.step_integer_t * l_pts);

    const AngleGrid once = tune_grid(grid, ctx, cfg);
    CHECK(once.azimuth[4] == doctest::Approx(grid.azimuth[4] + eps).epsilon(1e-12));

    // Repeated sweeps walk the active point to within eps of the truth.
    cfg.updates_per_em_iter = 2;
    AngleGrid cur = grid;
    for (int iter = 0; iter < cfg.step_integer_t; ++iter) {
        cur = tune_grid(cur, ctx, cfg);
    }
    CHECK(std::abs(cur.azimuth[4] - truth) <= eps + 1e-12);

    // Bounded per-call travel.
    for (std::size_t l = 0; l < l_pts; ++l) {
        CHECK(std::abs(once.azimuth[l] - grid.azimuth[l]) <= 1 * eps + 1e-15);
    }

    // Zero posteriors: nothing moves.
    const ComplexMatrix w0(l_pts, 5);
    const AngleTuneContext ctx0{y, w0, v_w, geom, 1e-6};
    const AngleGrid frozen = tune_grid(grid, ctx0, cfg);
    for (std::size_t l = 0; l < l_pts; ++l) CHECK(frozen.azimuth[l] == grid.azimuth[l]);
}
