#include <doctest.h>

#include <cmath>
#include <random>

#include "qszego/fit.hpp"
#include "qszego/hankel.hpp"
#include "qszego/l1_manifold.hpp"

using namespace qszego;

namespace {

FlowConfig ode_config(double dt, double t_end, std::size_t stride) {
    FlowConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.monitor_stride = stride;
    cfg.spectrum_rank = 2;
    return cfg;
}

}  // namespace

TEST_SUITE("l1_manifold") {

TEST_CASE("RationalState invariants") {
    CHECK(RationalState{1.0, 1.0, 0.5}.on_manifold());
    CHECK_FALSE(RationalState{1.0, 0.0, 0.5}.on_manifold());
    CHECK_FALSE(RationalState{1.0, 1.0, cplx(0.6, 0.8)}.on_manifold());
    CHECK_THROWS_AS(RationalState({1.0, 1.0, 1.0}).validate(), std::invalid_argument);
}

TEST_CASE("to_spectrum") {
    const auto a = to_spectrum({1.0, 1e-9, 0.0}, 4);
    CHECK(a[0] == 1.0);
    CHECK(a[1] == 1e-9);
    for (std::size_t k = 2; k <= 4; ++k) CHECK(a[k] == cplx{});

    CHECK(to_spectrum({0.0, 1.0, 0.0}, 3) == SpectrumPlus::monomial(1, 1.0, 3));

    const auto g = to_spectrum({1.0, 1.0, 0.5}, 4);
    const double expect[] = {1.0, 1.0, 0.5, 0.25, 0.125};
    for (std::size_t k = 0; k <= 4; ++k) CHECK(g[k] == expect[k]);
}

TEST_CASE("closed-form J and conserved quantities") {
    CHECK(std::abs(j_closed_form({0.0, 1.0, 0.5}) - 8.0 / 9.0) < 1e-15);
    CHECK(std::abs(compute_J(to_spectrum({0.0, 1.0, 0.5}, 80)) - 8.0 / 9.0) < 1e-12);
    CHECK(std::abs(j_closed_form({1.0, 1.0, 0.5}) - 41.0 / 9.0) < 1e-14);
    const cplx b{0.3, -0.2};
    const cplx c{0.5, 0.9};
    CHECK(std::abs(j_closed_form({b, c, 0.0}) - (std::norm(b) * b + 2.0 * b * std::norm(c))) < 1e-15);

    const auto z = conserved_closed_form({0.0, 1.0, 0.0});
    CHECK(z.Q == 1.0);
    CHECK(z.M == 1.0);
    CHECK(z.E == 0.0);

    const auto r = conserved_closed_form({1.0, 1.0, 0.5});
    CHECK(std::abs(r.Q - 7.0 / 3.0) < 1e-14);
    CHECK(std::abs(r.M - 16.0 / 9.0) < 1e-14);
    CHECK(std::abs(r.E - 0.5 * (41.0 / 9.0) * (41.0 / 9.0)) < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const RationalState s{{u(rng), u(rng)}, {u(rng), u(rng)}, {0.6 * u(rng), 0.6 * u(rng)}};
        const auto cf = conserved_closed_form(s);
        const auto num = conserved(to_spectrum(s, 160));
        CHECK(cf.Q == doctest::Approx(num.Q).epsilon(1e-12));
        CHECK(cf.M == doctest::Approx(num.M).epsilon(1e-12));
        CHECK(cf.E == doctest::Approx(num.E).epsilon(1e-12));
        CHECK(cf.E == doctest::Approx(0.5 * std::norm(cf.J)).epsilon(1e-12));
    }
}

TEST_CASE("ode_rhs") {
    const auto zero = ode_rhs({0.0, 1.0, 0.0});
    CHECK(zero.b == cplx{});
    CHECK(zero.c == cplx{});
    CHECK(zero.p == cplx{});
    CHECK(std::abs(ode_rhs({1.0, 1.0, 0.5}).p - cplx(0.0, -41.0 / 9.0)) < 1e-14);
}

TEST_CASE("evolve_ode conserves the closed forms") {
    const auto still = evolve_ode({0.0, 1.0, 0.0}, ode_config(1e-2, 1.0, 10));
    for (const auto& s : still.states) {
        CHECK(s.b == cplx{});
        CHECK(s.c == 1.0);
        CHECK(s.p == cplx{});
    }

    const RationalState s0{1.0, 1.0, 0.5};
    const auto traj = evolve_ode(s0, ode_config(1e-4, 10.0, 1000));
    REQUIRE_FALSE(traj.aborted);
    const auto c0 = conserved_closed_form(s0);
    const double sig0 = std::abs(s0.c) / (1.0 - std::norm(s0.p));
    for (const auto& s : traj.states) {
        const auto c = conserved_closed_form(s);
        CHECK(std::abs(c.Q - c0.Q) < 1e-9 * c0.Q);
        CHECK(std::abs(c.M - c0.M) < 1e-9 * c0.M);
        CHECK(std::abs(c.E - c0.E) < 1e-9 * c0.E);
        CHECK(std::abs(s.p) < 1.0);
        CHECK(std::abs(std::abs(s.c) / (1.0 - std::norm(s.p)) - sig0) < 1e-9);
    }
    // sigma_1(K_u) = sqrt(M) on the synthesized spectrum.
    const auto sk = sigma_spectrum(k_matrix(to_spectrum(traj.states.back(), 200), 201));
    CHECK(std::abs(sk.largest() - std::sqrt(c0.M)) < 1e-10);
}

TEST_CASE("resonance residual, kappa and envelope") {
    CHECK(resonance_residual({0.0, 1.0, 0.0}) == doctest::Approx(-0.5));
    const double e = 0.5 * (41.0 / 9.0) * (41.0 / 9.0) - 0.5 * std::pow(7.0 / 3.0, 3);
    CHECK(resonance_residual({1.0, 1.0, 0.5}) == doctest::Approx(e).epsilon(1e-13));
    CHECK(resonance_residual({1.0, 1.0, 0.5}) != doctest::Approx(0.0));

    CHECK(kappa(2.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(kappa(1.0, 1.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(kappa(4.0 - 1e-10, 1.0) < 1e-3);
    CHECK_THROWS_AS(kappa(4.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(kappa(-1.0, 1.0), std::domain_error);

    auto [rm, rp] = envelope_roots(2.0, 1.0);
    CHECK(rm == doctest::Approx((-4.0 - 4.0 * std::sqrt(10.0)) / 9.0).epsilon(1e-14));
    CHECK(rp == doctest::Approx((-4.0 + 4.0 * std::sqrt(10.0)) / 9.0).epsilon(1e-14));
    CHECK(rm * rp == doctest::Approx(-16.0 / 9.0).epsilon(1e-12));
    CHECK(std::abs(p_polynomial(rp, 2.0, 1.0)) < 1e-10);
    CHECK(p_polynomial(0.0, 2.0, 1.0) == doctest::Approx(16.0));

    auto [qm, qp] = envelope_roots(1.0, 1.0);
    CHECK(qm == doctest::Approx(-std::sqrt(3.0) / 2.0));
    CHECK(qp == doctest::Approx(std::sqrt(3.0) / 2.0));

    for (double Q : {0.3, 1.0, 2.0, 3.5}) {
        for (double M : {1.0, 2.5}) {
            const double disc = 8.0 * M * M * std::pow(Q, 4) + 4.0 * M * M * M * std::pow(Q, 3);
            CHECK(disc > 0.0);
            const auto env = envelope_data(Q, M);
            CHECK(env.r_minus < 0.0);
            CHECK(env.r_plus > 0.0);
            CHECK(env.r_plus * env.r_minus ==
                  doctest::Approx(-std::pow(Q, 3) * (4.0 * M - Q) / ((M + Q) * (M + Q))).epsilon(1e-12));
        }
    }
}

TEST_CASE("find_blowup_initial") {
    const RationalState s = find_blowup_initial(2.0, 1.0, 0.5);
    CHECK(std::abs(resonance_residual(s)) < 1e-10);
    CHECK(std::abs(s.p) == doctest::Approx(0.5).epsilon(1e-14));
    const auto c = conserved_closed_form(s);
    CHECK(c.Q == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(c.M == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.b.imag() == 0.0);
    CHECK(s.c.imag() == 0.0);
    CHECK(log_c_rate(s) < 0.0);

    // Homogeneity: lambda u stays resonant.
    const double lambda = 0.5;
    const RationalState half{lambda * s.b, lambda * s.c, s.p};
    CHECK(std::abs(resonance_residual(half)) < 1e-12);

    CHECK_THROWS_AS(find_blowup_initial(4.0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(find_blowup_initial(5.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("resonant trajectory: envelope identity and resonance identity") {
    const RationalState s0 = find_blowup_initial(2.0, 1.0, 0.5);
    const auto traj = evolve_ode(s0, ode_config(1e-4, 3.0, 1));
    REQUIRE_FALSE(traj.aborted);
    const double sqm = 1.0;
    double worst_env = 0.0;
    double worst_id = 0.0;
    for (std::size_t i = 1; i + 1 < traj.states.size(); ++i) {
        const double h = traj.times[i + 1] - traj.times[i - 1];
        const double lc = std::log(std::abs(traj.states[i + 1].c)) - std::log(std::abs(traj.states[i - 1].c));
        const double rate = lc / h;
        const double x = std::abs(traj.states[i].c) * sqm;
        worst_env = std::max(worst_env, std::abs(rate * rate - p_polynomial(x, 2.0, 1.0)));
        worst_id = std::max(worst_id, std::abs(resonance_identity_residual(traj.states[i], 2.0, 1.0)));
    }
    MESSAGE("envelope " << worst_env << ", identity " << worst_id);
    CHECK(worst_env < 1e-6);
    CHECK(worst_id < 1e-8);
}

TEST_CASE("dichotomy and growth diagnostic") {
    const RationalState res = find_blowup_initial(2.0, 1.0, 0.5);
    const auto rt = evolve_ode(res, ode_config(1e-4, 6.0, 100));
    REQUIRE_FALSE(rt.aborted);
    CHECK(growth_diagnostic(rt, 1.0) == doctest::Approx(4.0).epsilon(0.02));
    CHECK(std::abs(growth_diagnostic(rt, 0.5)) < 1e-3);
    CHECK_THROWS_AS(growth_diagnostic(rt, 0.4), std::invalid_argument);

    // Same Q, M, off resonance.
    const RationalState nr{std::sqrt(1.25), 0.75, 0.5};
    const auto cn = conserved_closed_form(nr);
    CHECK(cn.Q == doctest::Approx(2.0));
    CHECK(cn.M == doctest::Approx(1.0));
    const auto nt = evolve_ode(nr, ode_config(1e-3, 50.0, 10));
    REQUIRE_FALSE(nt.aborted);
    double delta = 1e300;
    for (const auto& s : nt.states) delta = std::min(delta, std::abs(s.c));
    MESSAGE("delta = " << delta);
    CHECK(delta > 0.1);
    CHECK_THROWS_AS(growth_diagnostic(nt, 1.0), NoExponentialRegime);
}

TEST_CASE("closed-form Hankel data") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const RationalState s{{u(rng), u(rng)}, {u(rng), u(rng)}, {0.5 * u(rng), 0.5 * u(rng)}};
        const auto v = to_spectrum(s, 120);
        const auto sv = sigma_spectrum(hankel_matrix(v, 121)).values;
        const auto cf = hankel_sigma_closed_form(s);
        CHECK(sv[0] == doctest::Approx(cf[0]).epsilon(1e-12));
        CHECK(sv[1] == doctest::Approx(cf[1]).epsilon(1e-10));
        CHECK(sv[2] < 1e-12);
        CHECK(h1_norm_sq_closed_form(s) == doctest::Approx(std::pow(sobolev_norm(v, 1.0), 2)).epsilon(1e-12));
    }
    const RationalState g{1.0, 2.0, 0.5};
    CHECK(tail_magnitude(g, 10) == doctest::Approx(2.0 * std::pow(0.5, 10) / 0.5));
}

}  // TEST_SUITE

TEST_SUITE("fit") {

TEST_CASE("fit_exponential") {
    std::vector<double> t;
    std::vector<double> y;
    std::vector<double> c;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.01 * k);
        y.push_back(std::exp(3.0 * t.back()));
        c.push_back(2.5);
    }
    const auto f = fit_exponential(t, y, {0.0, 1.0});
    CHECK(std::abs(f.slope - 3.0) < 1e-9);
    CHECK(f.points == 101);
    CHECK(f.residual_rms < 1e-12);
    CHECK(std::abs(fit_exponential(t, c, {0.0, 1.0}).slope) < 1e-12);

    std::vector<double> ys = y;
    for (auto& v : ys) v *= 1e5;
    CHECK(fit_exponential(t, ys, {0.2, 0.9}).slope == doctest::Approx(fit_exponential(t, y, {0.2, 0.9}).slope).epsilon(1e-12));

    CHECK_THROWS_AS(fit_exponential(t, y, {0.0, 0.05}), std::invalid_argument);
    std::vector<double> bad = y;
    bad[50] = 0.0;
    CHECK_THROWS_AS(fit_exponential(t, bad, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_exponential(t, std::span<const double>(y).first(50), {0.0, 1.0}), std::invalid_argument);
}

}  // TEST_SUITE
