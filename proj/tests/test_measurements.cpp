#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "catsim/analysis.hpp"
#include "catsim/measurements.hpp"
#include "catsim/states.hpp"
#include "test_helpers.hpp"

using namespace catsim;
using std::numbers::pi;

TEST_CASE("pnrd enumeration") {
    const int D = 24;
    // Fock |2>: only m = 2 carries weight
    PureState two = tensor(make_fock(2, D), make_fock(0, D));
    auto outs = pnrd_enumerate(two, 0, D - 1);
    for (const auto& o : outs)
        REQUIRE(o.probability == Catch::Approx(o.m == 2 ? 1.0 : 0.0).margin(1e-14));

    // coherent |alpha = 1>: Poisson weights e^{-1}/m!
    PureState coh = tensor(coherent(cplx(1, 0), D), make_fock(0, D));
    auto pois = pnrd_enumerate(coh, 0, 12);
    double fact = 1.0;
    for (int m = 0; m <= 12; ++m) {
        if (m > 0) fact *= m;
        REQUIRE(pois[m].probability == Catch::Approx(std::exp(-1.0) / fact).margin(1e-9));
    }

    // completeness on random states
    Rng rng(3);
    PureState r = test_helpers::random_state(2, 10, rng);
    r.amps() *= 1.3;
    r.refresh_norm();
    auto all = pnrd_enumerate(r, 1, 9);
    double total = 0.0;
    for (const auto& o : all) total += o.probability;
    REQUIRE(total == Catch::Approx(r.norm2()).margin(1e-10));
}

TEST_CASE("pnrd sampling is seeded and unbiased") {
    const int D = 12;
    Rng rng(9);
    PureState s = test_helpers::random_state(1, 6, rng);
    Vec big = Vec::Zero(D);
    big.head(6) = s.amps();
    PureState padded = tensor(PureState(std::move(big), 1, D), make_fock(0, D));

    // identical seeds give identical outcomes
    auto a = pnrd_sample(padded, 0, std::uint64_t(1234));
    auto b = pnrd_sample(padded, 0, std::uint64_t(1234));
    REQUIRE(a.m == b.m);

    // frequencies over 10^4 draws match enumerated weights within 3 sigma
    auto weights = pnrd_weights(padded, 0);
    const int ndraw = 10000;
    std::vector<int> counts(D, 0);
    Rng sampler(777);
    for (int i = 0; i < ndraw; ++i) ++counts[pnrd_sample(padded, 0, sampler).m];
    for (int m = 0; m < D; ++m) {
        const double p = weights[m];
        if (p == 0.0) {
            REQUIRE(counts[m] == 0);  // zero-weight outcomes never drawn
            continue;
        }
        const double sigma = std::sqrt(ndraw * p * (1 - p));
        REQUIRE(std::abs(counts[m] - ndraw * p) <= 3.5 * sigma + 1.0);
    }
}

TEST_CASE("homodyne projection facts") {
    const int D = 40;
    PureState vacpair = tensor(make_fock(0, D), make_fock(0, D));

    // vacuum density sqrt(2/pi) e^{-2x^2}
    for (double x : {0.0, 0.4, 1.1}) {
        auto [post, dens] = homodyne_project(vacpair, 1, x, 0.0);
        REQUIRE(dens ==
                Catch::Approx(std::sqrt(2.0 / pi) * std::exp(-2.0 * x * x)).margin(1e-9));
    }

    // density integrates to 1 (trapezoid, step 0.01, range +-6)
    PureState probe = tensor(coherent(cplx(0.7, 0.2), D), make_fock(0, D));
    double integral = 0.0;
    const double step = 0.01;
    for (double x = -6.0; x <= 6.0 + 1e-12; x += step)
        integral += homodyne_project(probe, 0, x, 0.0).second * step;
    REQUIRE(integral == Catch::Approx(1.0).margin(1e-6));

    // |1> at x = 0: odd Hermite node
    PureState one = tensor(make_fock(1, D), make_fock(0, D));
    REQUIRE(homodyne_project(one, 0, 0.0, 0.0).second < 1e-12);

    // p-quadrature projection equals q projection of the rotated state
    Rng rng(21);
    PureState r = test_helpers::random_state(1, 10, rng);
    Vec big = Vec::Zero(D);
    big.head(10) = r.amps();
    PureState rp = tensor(PureState(std::move(big), 1, D), make_fock(0, D));
    auto [p1, d1] = homodyne_project(rp, 0, 0.6, pi / 2.0);
    PureState rot = apply(*rotation(-pi / 2.0, D), rp, 0);
    auto [p2, d2] = homodyne_project(rot, 0, 0.6, 0.0);
    REQUIRE(d1 == Catch::Approx(d2).margin(1e-10));
}

TEST_CASE("squeezed pnrd composition") {
    const int D = 30;
    Rng rng(31);
    PureState s = test_helpers::random_state(2, D, rng);

    // r = 0 reduces to plain PNRD
    auto [post0, w0] = squeezed_pnrd(s, 1, 0.0, 0.0, 3);
    Vec bra = Vec::Zero(D);
    bra[3] = 1.0;
    auto [postp, wp] = project_mode(s, 1, bra);
    REQUIRE(w0 == Catch::Approx(wp).margin(1e-14));

    // equals apply(squeeze) then PNRD
    auto [post1, w1] = squeezed_pnrd(s, 1, 0.6, 0.3, 2);
    PureState squeezed = apply(*squeeze(0.6, 0.3, D), s, 1);
    Vec bra2 = Vec::Zero(D);
    bra2[2] = 1.0;
    auto [post2, w2] = project_mode(squeezed, 1, bra2);
    REQUIRE(w1 == Catch::Approx(w2).margin(1e-12));
    REQUIRE(test_helpers::max_abs_diff(post1.amps(), post2.amps()) < 1e-12);

    // weight invariant under a global input phase
    PureState phased = s;
    phased.amps() *= std::exp(cplx(0, 0.83));
    phased.refresh_norm();
    auto [post3, w3] = squeezed_pnrd(phased, 1, 0.6, 0.3, 2);
    REQUIRE(w3 == Catch::Approx(w1).margin(1e-12));
}

TEST_CASE("four-cat measurement") {
    const int D = 40;

    // m1 = m2 = 0: even-parity POVM element
    PureState e00 = fourcat_povm_element(0, 0, 1.0, D);
    double odd = 0.0;
    for (int n = 1; n < D; n += 2) odd += std::norm(e00.amps()[n]);
    REQUIRE(odd / e00.norm2() < 1e-10);

    // r = 2, m1 = m2 = 1: fidelity with the analytic 4-cat >= 0.95
    auto analytic_fourcat = [&](int m1, int m2, double r) {
        const cplx g = (std::sqrt(double(m2)) + cplx(0, 1) * std::sqrt(double(m1))) *
                       std::sqrt(2.0) * std::exp(-std::abs(r));
        const cplx comps[4] = {g, std::conj(g), -std::conj(g), -g};
        const double signs[4] = {1.0, m1 % 2 ? -1.0 : 1.0, m2 % 2 ? -1.0 : 1.0,
                                 (m1 + m2) % 2 ? -1.0 : 1.0};
        Vec v = Vec::Zero(D);
        for (int k = 0; k < 4; ++k) v += signs[k] * coherent(comps[k], D).amps();
        return PureState(std::move(v), 1, D);
    };
    PureState e11 = fourcat_povm_element(1, 1, 2.0, D);
    REQUIRE(fidelity(e11, analytic_fourcat(1, 1, 2.0)) >= 0.95);
    PureState e21 = fourcat_povm_element(2, 1, 2.0, D);
    REQUIRE(fidelity(e21, analytic_fourcat(2, 1, 2.0)) >= 0.95);

    // FourCatSpec closed-form fields
    FourCatSpec spec{1, 1, 2.0};
    REQUIRE(spec.beta_amplitude() == Catch::Approx(2.0 * std::exp(-2.0)));
    REQUIRE(spec.theta1() == Catch::Approx(std::atan(1.0)));

    // POVM completeness: sum over outcomes approaches identity on low levels
    const int Dc = 26, m_max = 20;
    Mat acc = Mat::Zero(Dc, Dc);
    for (int m1 = 0; m1 <= m_max; ++m1)
        for (int m2 = 0; m2 <= m_max; ++m2) {
            PureState e = fourcat_povm_element(m1, m2, 0.7, Dc);
            acc += e.amps().conjugate() * e.amps().transpose();
        }
    for (int n = 0; n <= 8; ++n)
        for (int m = 0; m <= 8; ++m) {
            const double expect = n == m ? 1.0 : 0.0;
            REQUIRE(std::abs(acc(n, m) - expect) < 5e-3);
        }
}

TEST_CASE("homodyne limit of squeezed pnrd") {
    // m = 0 with growing squeeze strength converges to the x = 0 quadrature
    // projection (the two bra vectors approach each other)
    const int D = 48;
    const int n = 6;
    PureState joint = tensor(make_fock(n, D), make_fock(0, D));
    apply_beamsplitter(joint, 0, 1, 0.5);
    auto [href, hw] = homodyne_project(joint, 1, 0.0, 0.0);
    double prev = 0.0;
    for (double r : {1.0, 1.5, 2.0, 2.5}) {
        auto [post, w] = squeezed_pnrd(joint, 1, r, pi / 2.0, 0);
        const double f = fidelity(post, href);
        REQUIRE(f > prev);
        prev = f;
    }
    REQUIRE(prev > 0.99);
}
