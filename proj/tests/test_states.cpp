#include <catch2/catch_amalgamated.hpp>
#include <numbers>

#include "catsim/analysis.hpp"
#include "catsim/states.hpp"
#include "test_helpers.hpp"

using namespace catsim;
using std::numbers::pi;

TEST_CASE("coherent state facts") {
    const int D = 40;
    PureState vac = coherent(cplx(0, 0), D);
    REQUIRE(vac.amps()[0] == cplx(1, 0));

    // <n> = |alpha|^2 for alpha = 1.5
    PureState c = coherent(cplx(1.5, 0), D);
    REQUIRE(mean_photon_number(c) == Catch::Approx(2.25).margin(1e-8));

    // |<alpha|beta>|^2 = e^{-|alpha-beta|^2} at (1, 0.5)
    PureState a = coherent(cplx(1, 0), D), b = coherent(cplx(0.5, 0), D);
    REQUIRE(std::norm(inner(a, b)) == Catch::Approx(std::exp(-0.25)).margin(1e-8));
}

TEST_CASE("displaced squeezed state moments and reorder route") {
    const int D = 60;
    PureState r0 = displaced_squeezed(0.8, 0.0, D);
    REQUIRE(fidelity(r0, coherent(cplx(0.8, 0), D)) == Catch::Approx(1.0).margin(1e-10));

    const double alpha = 1.1, r = 0.5;
    PureState ds = displaced_squeezed(alpha, r, D);
    Mat q = position_op(D);
    Vec qs = q * ds.amps();
    REQUIRE(ds.amps().dot(qs).real() == Catch::Approx(alpha).margin(1e-7));
    REQUIRE(quadrature_variance(ds, 0.0) == Catch::Approx(std::exp(-2 * r) / 4.0).margin(1e-7));

    // |alpha, r> = S(r) D(alpha e^r) |0>
    PureState other(
        (squeeze_matrix(r, 0, D) * displacement_matrix(cplx(alpha * std::exp(r), 0), D)).col(0), 1,
        D);
    REQUIRE(fidelity(ds, other) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("cat parity structure") {
    const int D = 50;
    // alpha = 0 even cat degenerates to squeezed vacuum
    PureState degen = cat(0.0, 0.4, Parity::even, D);
    PureState sv(squeeze_matrix(0.4, 0, D).col(0), 1, D);
    REQUIRE(fidelity(degen, sv) == Catch::Approx(1.0).margin(1e-12));

    // even cat has exactly zero odd amplitudes
    PureState even = cat(std::sqrt(6.0), 0.0, Parity::even, D);
    for (int n = 1; n < D; n += 2) REQUIRE(std::abs(even.amps()[n]) == 0.0);
    PureState odd = cat(std::sqrt(6.0), 0.0, Parity::odd, D);
    for (int n = 0; n < D; n += 2) REQUIRE(std::abs(odd.amps()[n]) == 0.0);

    // odd cat alpha -> 0 approaches S(r)|1>
    PureState tiny = cat(1e-3, 0.5, Parity::odd, D);
    PureState sf = squeezed_fock(1, 0.5, D);
    REQUIRE(fidelity(tiny, sf) == Catch::Approx(1.0).margin(1e-4));

    REQUIRE(std::abs(even.norm2() - 1.0) < 1e-12);
}

TEST_CASE("gkp states") {
    const int D = 120;
    // delta = 1, u_max = 0, logical 0: single undisplaced component = vacuum
    PureState g1 = gkp({1.0, 0, 0, 24});
    REQUIRE(fidelity(g1, make_fock(0, 24)) == Catch::Approx(1.0).margin(1e-12));

    // 10 dB state: Wigner positive peaks along q at spacing sqrt(pi/2)
    PureState g10 = gkp({0.316, 0, -1, D});
    GridSpec gs;
    gs.q_min = -3.2;
    gs.q_max = 3.2;
    gs.p_min = -0.8;
    gs.p_max = 0.8;
    gs.step = 0.04;
    WignerGrid w = wigner(g10, gs);
    auto peaks = find_wigner_peaks(w);
    std::vector<double> qpos;
    for (const auto& pk : peaks)
        if (std::abs(pk.p) < 0.05 && pk.value > 0) qpos.push_back(pk.q);
    std::sort(qpos.begin(), qpos.end());
    REQUIRE(qpos.size() >= 3);
    const double s = std::sqrt(pi / 2.0);
    for (std::size_t i = 1; i < qpos.size(); ++i) {
        const double gap = qpos[i] - qpos[i - 1];
        REQUIRE(gap == Catch::Approx(s).epsilon(0.05));
    }

    // logical overlap decreases as delta decreases
    double prev = 1.0;
    for (double delta : {0.5, 0.4, 0.316}) {
        PureState z = gkp({delta, 0, -1, D});
        PureState o = gkp({delta, 1, -1, D});
        const double ov = std::abs(inner(z, o));
        REQUIRE(ov < prev);
        prev = ov;
    }

    // cutoff guard trips when the comb cannot be represented
    REQUIRE_THROWS_AS(gkp({0.2, 0, -1, 24}), CutoffExceeded);
}

TEST_CASE("target state is the two-component core") {
    const int D = 70;
    PureState t = target_state(0.5, D);
    PureState c = cat(std::sqrt(pi / 2.0), -std::log(0.5), Parity::even, D);
    REQUIRE((t.amps() - c.amps()).cwiseAbs().maxCoeff() < 1e-12);

    // delta = 1: even cat of coherent states
    PureState t1 = target_state(1.0, D);
    PureState cc = cat(std::sqrt(pi / 2.0), 0.0, Parity::even, D);
    REQUIRE((t1.amps() - cc.amps()).cwiseAbs().maxCoeff() < 1e-12);

    // fidelity with the full comb grows with delta (fewer side components)
    double prev = 0.0;
    for (double delta : {0.3, 0.4, 0.5}) {
        PureState comb = gkp({delta, 1, -1, 260});
        PureState core = target_state(delta, 260);
        const double f = fidelity(core, comb);
        REQUIRE(f > prev);
        prev = f;
    }
    REQUIRE(prev > 0.99);  // delta = 0.5
}

TEST_CASE("squeezed Fock facts") {
    const int D = 160;
    PureState plain = squeezed_fock(3, 0.0, D);
    REQUIRE(fidelity(plain, make_fock(3, D)) == Catch::Approx(1.0));

    // <n> = (2n+1) sinh^2 r + n for n = 3 at the 6 dB point
    const double r = db_to_r(6.0);
    PureState sf = squeezed_fock(3, r, D);
    REQUIRE(mean_photon_number(sf) ==
            Catch::Approx(squeezed_fock_mean_photons(3, r)).margin(1e-6));

    // parity of support equals parity of n
    for (int n = 0; n < D; ++n)
        if ((n % 2) != (3 % 2)) REQUIRE(std::abs(sf.amps()[n]) == 0.0);

    // formula check across n <= 5, r <= 1
    for (int n = 0; n <= 5; ++n)
        for (double rr : {0.25, 0.5, 1.0})
            REQUIRE(mean_photon_number(squeezed_fock(n, rr, D)) ==
                    Catch::Approx(squeezed_fock_mean_photons(n, rr)).margin(1e-6));
}

TEST_CASE("cutoff probability") {
    const int D = 120;
    REQUIRE(cutoff_probability(4, 0.7, 0, D) == 1.0);
    REQUIRE(cutoff_probability(3, 0.0, 4, D) == 0.0);

    // monotone nonincreasing in the threshold
    double prev = 1.0;
    for (int nc = 0; nc <= 30; nc += 3) {
        const double p = cutoff_probability(2, db_to_r(10.0), nc, D);
        REQUIRE(p <= prev + 1e-15);
        prev = p;
    }
}

TEST_CASE("constructors are normalized and deterministic") {
    const int D = 80;
    for (double alpha : {0.5, 1.5, 2.5}) {
        PureState c = cat(alpha, 0.3, Parity::even, D);
        REQUIRE(std::abs(c.norm2() - 1.0) < 1e-12);
    }
    PureState a = gkp({0.45, 1, -1, D});
    PureState b = gkp({0.45, 1, -1, D});
    REQUIRE((a.amps() - b.amps()).cwiseAbs().maxCoeff() == 0.0);
}
