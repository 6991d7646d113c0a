// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aemmp/amf_mp.hpp"
#include "aemmp/array_geometry.hpp"
#include "test_helpers.hpp"

using namespace aemmp;

namespace {

AmfState blank_state(const AmfDims& dims) {
    const SignalPrior prior(1.0);
    Rng rng(1);
    AmfState st = init_state(dims, prior, rng);
    for (cplx& v : st.x_hat.data()) v = cplx(0.0, 0.0);
    return st;
}

SPriorMsgs uniform_msgs(std::size_t l, std::size_t k, double active, double slab) {
    SPriorMsgs msgs;
    msgs.active_prob = RealMatrix(l, k, active);
    msgs.slab_var = RealMatrix(l, k, slab);
    return msgs;
}

}  // namespace

TEST_CASE("init_state: prescribed starting point") {
    const SignalPrior prior(1.0);
    Rng rng(61);
    const AmfState st = init_state({4, 6, 2, 5}, prior, rng);
    for (double v : st.v_w.data()) CHECK(v == 10.0);
    for (double v : st.v_s.data()) CHECK(v == 10.0);
    for (double v : st.v_x.data()) CHECK(v == 10.0);
    for (const cplx& v : st.s_hat.data()) CHECK(v == cplx(0.0, 0.0));
    for (const cplx& v : st.w_hat.data()) CHECK(v == cplx(0.0, 0.0));
    for (const cplx& v : st.prev_beta_hat.data()) CHECK(v == cplx(0.0, 0.0));

    Rng rng_a(7);
    Rng rng_b(7);
    const AmfState a = init_state({2, 3, 2, 4}, prior, rng_a);
    const AmfState b = init_state({2, 3, 2, 4}, prior, rng_b);
    CHECK(testing::max_abs_diff(a.x_hat, b.x_hat) == 0.0);
}

TEST_CASE("output_half_step substitution example") {
    AmfConfig cfg;
    AmfState st = blank_state({1, 2, 1, 1});
    ComplexMatrix a(1, 2);
    a(0, 0) = cplx(std::sqrt(0.5), 0.0);
    a(0, 1) = cplx(0.0, std::sqrt(0.5));  // |A|^2 = [0.5, 0.5]
    ComplexMatrix y(1, 1);
    y(0, 0) = cplx(2.0, 0.0);

    st.v_w(0, 0) = 2.0;
    st.v_w(1, 0) = 4.0;
    output_half_step(st, a, y, 1.0, 1.0, cfg);
    CHECK(st.v_u(0, 0) == doctest::Approx(3.0).epsilon(1e-14));

    // Second pass with v_w forced to give v_u = 1, w/prev_beta zero: the AWGN
    // denoiser and beta examples.
    st = blank_state({1, 2, 1, 1});
    st.v_w(0, 0) = 1.0;
    st.v_w(1, 0) = 1.0;
    output_half_step(st, a, y, 1.0, 1.0, cfg);
    CHECK(st.v_u(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(st.u_hat(0, 0)) == 0.0);
    CHECK(st.v_z(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(st.z_hat(0, 0) - cplx(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(st.beta_hat(0, 0) - cplx(1.0, 0.0)) < 1e-14);
    CHECK(st.v_beta(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    // beta memory stored for the next iteration.
    CHECK(st.prev_beta_hat(0, 0) == st.beta_hat(0, 0));

    CHECK_THROWS_AS(output_half_step(st, a, y, 0.0, 1.0, cfg), std::invalid_argument);
}

TEST_CASE("output_half_step: the first-order correction term is live") {
    AmfConfig cfg;
    Rng rng(62);
    const ComplexMatrix a = testing::random_matrix(4, 6, rng);
    const ComplexMatrix y = testing::random_matrix(4, 3, rng);

    AmfState with = blank_state({4, 6, 1, 3});
    with.w_hat = testing::random_matrix(6, 3, rng);
    AmfState without = with;
    with.prev_beta_hat = testing::random_matrix(4, 3, rng);
    // "without" keeps prev_beta_hat at zero.

    output_half_step(with, a, y, 0.5, 1.0, cfg);
    output_half_step(without, a, y, 0.5, 1.0, cfg);
    CHECK(testing::max_abs_diff(with.u_hat, without.u_hat) > 1e-6);
}

TEST_CASE("central_half_step substitution examples") {
    AmfConfig cfg;
    AmfState st = blank_state({1, 1, 1, 1});
    st.s_hat(0, 0) = cplx(2.0, 0.0);
    st.v_s(0, 0) = 1.0;
    st.x_hat(0, 0) = cplx(3.0, 0.0);
    st.v_x(0, 0) = 1.0;
    st.v_zeta(0, 0) = 1.0;
    st.zeta_hat(0, 0) = cplx(2.0, 0.0);
    central_half_step(st, 1.0, cfg);
    CHECK(std::abs(st.p_hat(0, 0) - cplx(6.0, 0.0)) < 1e-14);
    CHECK(st.v_p(0, 0) == doctest::Approx(14.0).epsilon(1e-14));

    // v_p = 1, v_zeta = 1, zeta = 2, p = 0 -> v_gamma = 0.5, gamma = 1.
    st = blank_state({1, 1, 1, 1});
    st.s_hat(0, 0) = cplx(1.0, 0.0);
    st.v_s(0, 0) = 0.0;
    st.x_hat(0, 0) = cplx(0.0, 0.0);
    st.v_x(0, 0) = 1.0;
    st.v_zeta(0, 0) = 1.0;
    st.zeta_hat(0, 0) = cplx(2.0, 0.0);
    central_half_step(st, 1.0, cfg);
    CHECK(st.v_p(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(st.p_hat(0, 0)) == 0.0);
    CHECK(st.v_gamma(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(st.gamma_hat(0, 0) - cplx(1.0, 0.0)) < 1e-14);
    CHECK(st.prev_gamma_hat(0, 0) == st.gamma_hat(0, 0));

    // Degenerate all-zero variances hit the floor.
    st = blank_state({1, 1, 1, 1});
    st.s_hat(0, 0) = cplx(2.0, 0.0);
    st.x_hat(0, 0) = cplx(3.0, 0.0);
    st.v_s(0, 0) = 0.0;
    st.v_x(0, 0) = 0.0;
    st.v_zeta(0, 0) = 1.0;
    central_half_step(st, 1.0, cfg);
    CHECK(st.v_p(0, 0) == cfg.variance_floor);
}

TEST_CASE("input_half_step: Gaussian product and certain spike") {
    AmfConfig cfg;
    const SignalPrior prior(1.0);
    AmfState st = blank_state({1, 1, 1, 1});
    // Force v_r = 1, r = 2 through the q/r construction.
    st.s_hat(0, 0) = cplx(1.0, 0.0);
    st.v_s(0, 0) = 0.0;
    st.v_gamma(0, 0) = 1.0;
    st.gamma_hat(0, 0) = cplx(2.0, 0.0);
    st.x_hat(0, 0) = cplx(0.0, 0.0);
    st.v_x(0, 0) = 1.0;
    const SPriorMsgs spike = uniform_msgs(1, 1, 0.0, 1.0);
    input_half_step(st, prior, spike, 1.0, cfg);
    CHECK(st.v_r(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(st.r_hat(0, 0) - cplx(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(st.x_hat(0, 0) - cplx(1.0, 0.0)) < 1e-14);
    CHECK(st.v_x(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    // pi_in = 0: spike posterior, variance clamped to the floor.
    CHECK(std::abs(st.s_hat(0, 0)) == 0.0);
    CHECK(st.v_s(0, 0) == cfg.variance_floor);
}

TEST_CASE("fact1_moments closed forms") {
    const cplx one(1.0, 0.0);
    {
        const cplx s[] = {one};
        const double vs[] = {0.0};
        const cplx x[] = {one};
        const double vx[] = {0.0};
        const auto [m, v] = fact1_moments(s, vs, x, vx);
        CHECK(m == one);
        CHECK(v == 0.0);
    }
    {
        const cplx s[] = {cplx(0.0, 0.0), cplx(0.0, 0.0)};
        const double vs[] = {0.5, 2.0};
        const cplx x[] = {cplx(0.0, 0.0), cplx(0.0, 0.0)};
        const double vx[] = {3.0, 0.25};
        const auto [m, v] = fact1_moments(s, vs, x, vx);
        CHECK(std::abs(m) == 0.0);
        CHECK(v == doctest::Approx(0.5 * 3.0 + 2.0 * 0.25).epsilon(1e-14));
    }
}

TEST_CASE("fact1_moments against a sampling oracle") {
    Rng rng(63);
    for (int rep = 0; rep < 5; ++rep) {
        const int k = 2 + static_cast<int>(rng.next_u64() % 3);
        std::vector<cplx> sm(k);
        std::vector<double> sv(k);
        std::vector<cplx> xm(k);
        std::vector<double> xv(k);
        cplx mean_ref;
        do {
            mean_ref = cplx(0.0, 0.0);
            for (int i = 0; i < k; ++i) {
                sm[i] = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
                xm[i] = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
                sv[i] = rng.uniform(0.05, 0.3);
                xv[i] = rng.uniform(0.05, 0.3);
                mean_ref += sm[i] * xm[i];
            }
        } while (std::abs(mean_ref) < 1.0);

        const auto [mean, var] = fact1_moments(sm, sv, xm, xv);

        const int draws = 1000000;
        cplx acc(0.0, 0.0);
        double acc2 = 0.0;
        for (int d = 0; d < draws; ++d) {
            cplx w(0.0, 0.0);
            for (int i = 0; i < k; ++i) {
                w += sample_cgaussian(sm[i], sv[i], rng) * sample_cgaussian(xm[i], xv[i], rng);
            }
            acc += w;
            acc2 += std::norm(w);
        }
        acc /= static_cast<double>(draws);
        const double var_mc = acc2 / draws - std::norm(acc);
        CHECK(std::abs(acc - mean) / std::abs(mean) < 0.01);
        CHECK(std::abs(var_mc - var) / var < 0.01);
    }
}

TEST_CASE("run_amf: noiseless rank-1 grid recovery") {
    const int n = 8;
    const ArrayGeometry geom = Ula{n, 0.5};
    const AngleGrid grid = AngleGrid::uniform(8, std::numbers::pi / 2.0);
    const ComplexMatrix a = response_matrix(geom, grid);

    ComplexMatrix s(8, 1);
    s(3, 0) = cplx(1.0, 0.0);
    Rng rng(64);
    const ComplexMatrix x = testing::random_matrix(1, 8, rng);
    const ComplexMatrix y = matmul(a, matmul(s, x));

    const SignalPrior prior(1.0);
    AmfState st = init_state({n, 8, 1, 8}, prior, rng);
    AmfConfig cfg;
    const SPriorMsgs msgs = uniform_msgs(8, 1, 1.0 / 8.0, 1.0);
    const AmfRunInfo info = run_amf(st, a, y, 1e-8, prior, msgs, cfg);
    CHECK(info.iterations >= 1);
    CHECK(info.residual / frobenius_norm(y) < 1e-3);
}

TEST_CASE("run_amf: stop rule and determinism") {
    Rng rng(65);
    const ComplexMatrix a = testing::random_matrix(6, 10, rng, 1.0 / 6.0);
    const ComplexMatrix y = testing::random_matrix(6, 4, rng);
    const SignalPrior prior(1.0);
    const SPriorMsgs msgs = uniform_msgs(10, 2, 0.3, 1.0);

    AmfConfig one_shot;
    one_shot.stop_tol = INFINITY;
    Rng init_rng(66);
    AmfState st = init_state({6, 10, 2, 4}, prior, init_rng);
    const AmfRunInfo info = run_amf(st, a, y, 0.5, prior, msgs, one_shot);
    CHECK(info.iterations == 1);

    AmfConfig cfg;
    cfg.max_inner_iters = 40;
    Rng ra(67);
    Rng rb(67);
    AmfState sa = init_state({6, 10, 2, 4}, prior, ra);
    AmfState sb = init_state({6, 10, 2, 4}, prior, rb);
    run_amf(sa, a, y, 0.5, prior, msgs, cfg);
    run_amf(sb, a, y, 0.5, prior, msgs, cfg);
    CHECK(testing::max_abs_diff(sa.x_hat, sb.x_hat) == 0.0);
    CHECK(testing::max_abs_diff(sa.s_hat, sb.s_hat) == 0.0);
}

TEST_CASE("run_amf: variances stay above the floor") {
    Rng rng(68);
    const ComplexMatrix a = testing::random_matrix(5, 8, rng, 1.0 / 5.0);
    const ComplexMatrix y = testing::random_matrix(5, 3, rng);
    const SignalPrior prior(1.0);
    const SPriorMsgs msgs = uniform_msgs(8, 2, 0.25, 1.0);
    AmfConfig cfg;
    cfg.max_inner_iters = 25;
    AmfState st = init_state({5, 8, 2, 3}, prior, rng);
    run_amf(st, a, y, 0.3, prior, msgs, cfg);
    for (const RealMatrix* m : {&st.v_w, &st.v_u, &st.v_z, &st.v_beta, &st.v_zeta, &st.v_p,
                                &st.v_gamma, &st.v_r, &st.v_q, &st.v_x, &st.v_s}) {
        for (double v : m->data()) CHECK(v >= cfg.variance_floor);
    }
}

TEST_CASE("run_amf: data fit on well-conditioned known-grid instances") {
    const int n = 32;
    const int l = 32;
    const int k = 2;
    const int t = 16;
    const ArrayGeometry geom = Ula{n, 0.5};
    const ComplexMatrix a = response_matrix(geom, AngleGrid::uniform(l, std::numbers::pi / 2.0));
    const SignalPrior prior(1.0);
    const double lambda = 0.2;
    const double noise_var = k / 1000.0;  // 30 dB

    int good = 0;
    for (int inst = 0; inst < 50; ++inst) {
        Rng rng(100 + inst);
        ComplexMatrix s(l, k);
        for (cplx& v : s.data()) {
            if (rng.uniform01() < lambda) v = sample_cgaussian(cplx(0.0, 0.0), 1.0, rng);
        }
        const ComplexMatrix x = testing::random_matrix(k, t, rng);
        ComplexMatrix y = matmul(a, matmul(s, x));
        for (cplx& v : y.data()) v = sample_cgaussian(v, noise_var, rng);

        AmfState st = init_state({n, l, k, t}, prior, rng);
        const SPriorMsgs msgs = uniform_msgs(l, k, lambda, 1.0);
        const AmfRunInfo info = run_amf(st, a, y, noise_var, prior, msgs, AmfConfig{});
        if (info.residual / frobenius_norm(y) <= 0.1) ++good;
    }
    CHECK(good >= 45);
}
