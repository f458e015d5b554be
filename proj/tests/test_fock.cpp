#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "catsim/fock.hpp"
#include "catsim/gaussian.hpp"
#include "test_helpers.hpp"

using namespace catsim;
using test_helpers::random_state;

TEST_CASE("make_fock basics") {
    PureState vac = make_fock(0, 10);
    REQUIRE(vac.amps()[0] == cplx(1, 0));
    REQUIRE(vac.norm2() == Catch::Approx(1.0));

    PureState three = make_fock(3, 10);
    REQUIRE(three.amps()[3] == cplx(1, 0));
    for (int i = 0; i < 10; ++i)
        if (i != 3) REQUIRE(three.amps()[i] == cplx(0, 0));

    REQUIRE_THROWS_AS(make_fock(10, 10), CutoffExceeded);
}

TEST_CASE("tensor ordering and norms") {
    PureState one = make_fock(1, 4);
    PureState zero = make_fock(0, 4);
    PureState joint = tensor(one, zero);
    // first mode is the slower index
    REQUIRE(joint.amps()[1 * 4 + 0] == cplx(1, 0));

    Rng rng(7);
    PureState a = random_state(1, 4, rng);
    PureState b = random_state(1, 4, rng);
    a.amps() *= 0.5;
    a.refresh_norm();
    b.amps() *= 0.5;
    b.refresh_norm();
    PureState ab = tensor(a, b);
    REQUIRE(ab.norm2() == Catch::Approx(a.norm2() * b.norm2()).epsilon(1e-12));

    PureState an = a.normalized(), bn = b.normalized();
    REQUIRE(tensor(an, bn).norm2() == Catch::Approx(1.0).epsilon(1e-12));

    PureState mismatched = make_fock(0, 5);
    REQUIRE_THROWS_AS(tensor(a, mismatched), std::invalid_argument);
}

TEST_CASE("apply identity and unitarity") {
    const int D = 12;
    Rng rng(3);
    PureState s = random_state(2, D, rng);

    ModeOperator id = ModeOperator::one_mode(Mat::Identity(D, D), D);
    PureState s2 = apply(id, s, 0);
    REQUIRE(test_helpers::max_abs_diff(s2.amps(), s.amps()) < 1e-15);

    auto U = rotation(0.7, D);
    PureState forward = apply(*U, s, 1);
    PureState back = apply(*rotation(-0.7, D), forward, 1);
    REQUIRE(test_helpers::max_abs_diff(back.amps(), s.amps()) < 1e-9);
    REQUIRE(std::abs(forward.norm2() - s.norm2()) < 1e-12);

    REQUIRE_THROWS_AS(apply(id, s, 2), std::invalid_argument);
}

TEST_CASE("two-mode apply leaves spectator marginals unchanged") {
    const int D = 6;
    Rng rng(11);
    PureState s = random_state(3, D, rng);
    DensityState before = partial_trace(DensityState::from_pure(s), {2});

    auto bs = beamsplitter(0.3, D);
    PureState s2 = apply(*bs, s, 0, 1);
    DensityState after = partial_trace(DensityState::from_pure(s2), {2});
    REQUIRE((before.rho() - after.rho()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("project_mode basics and completeness") {
    const int D = 6;
    // |0,1>: project mode 1 with <1|
    PureState s = tensor(make_fock(0, D), make_fock(1, D));
    Vec bra = Vec::Zero(D);
    bra[1] = 1.0;
    auto [post, w] = project_mode(s, 1, bra);
    REQUIRE(w == Catch::Approx(1.0));
    REQUIRE(post.modes() == 1);
    REQUIRE(std::abs(post.amps()[0] - cplx(1, 0)) < 1e-15);

    // Bell-like: (|0,0> + |1,1>)/sqrt2 projected with <1|
    Vec bell = Vec::Zero(D * D);
    bell[0] = 1.0 / std::sqrt(2.0);
    bell[1 * D + 1] = 1.0 / std::sqrt(2.0);
    PureState b(std::move(bell), 2, D);
    auto [post2, w2] = project_mode(b, 1, bra);
    REQUIRE(w2 == Catch::Approx(0.5));
    REQUIRE(std::abs(post2.amps()[1]) == Catch::Approx(1.0 / std::sqrt(2.0)));

    // completeness over all Fock bras
    Rng rng(5);
    PureState r = random_state(2, D, rng);
    r.amps() *= 0.8;
    r.refresh_norm();
    double total = 0.0;
    for (int m = 0; m < D; ++m) {
        Vec e = Vec::Zero(D);
        e[m] = 1.0;
        total += project_mode(r, 0, e).second;
    }
    REQUIRE(total == Catch::Approx(r.norm2()).margin(1e-10));
}

TEST_CASE("partial trace") {
    const int D = 5;
    // product state: tracing out one factor leaves the other
    Rng rng(13);
    PureState a = random_state(1, D, rng), b = random_state(1, D, rng);
    DensityState joint = DensityState::from_pure(tensor(a, b));
    DensityState kept = partial_trace(joint, {0});
    Mat expect = a.amps() * a.amps().adjoint();
    REQUIRE((kept.rho() - expect).cwiseAbs().maxCoeff() < 1e-12);

    // Bell pair: reduced state is maximally mixed on the 2-level block
    Vec bell = Vec::Zero(D * D);
    bell[0] = bell[1 * D + 1] = 1.0 / std::sqrt(2.0);
    DensityState rho = DensityState::from_pure(PureState(std::move(bell), 2, D));
    DensityState red = partial_trace(rho, {1});
    REQUIRE(red.rho()(0, 0).real() == Catch::Approx(0.5));
    REQUIRE(red.rho()(1, 1).real() == Catch::Approx(0.5));
    REQUIRE(std::abs(red.rho()(0, 1)) < 1e-14);

    // full trace of a normalized state
    DensityState all = partial_trace(rho, {});
    REQUIRE(all.rho()(0, 0).real() == Catch::Approx(1.0).margin(1e-12));

    // trace preserved
    REQUIRE(red.trace() == Catch::Approx(rho.trace()).margin(1e-12));
}

TEST_CASE("normalization and parity bookkeeping") {
    Rng rng(17);
    PureState s = random_state(1, 20, rng);
    s.amps() *= 3.7;
    s.refresh_norm();
    s.normalize();
    REQUIRE(std::abs(s.norm2() - 1.0) < 1e-12);

    // even state has zero odd population
    Vec v = Vec::Zero(8);
    v[0] = 0.6;
    v[2] = 0.8;
    PureState even(std::move(v), 1, 8);
    auto [pe, po] = even.parity_populations();
    REQUIRE(pe == Catch::Approx(1.0));
    REQUIRE(po == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("tail mass accounting") {
    const int D = 6;
    Vec v = Vec::Zero(D * D);
    v[(D - 1) * D + 0] = 1.0;  // top level of mode 0
    PureState s(std::move(v), 2, D);
    REQUIRE(s.tail_mass(0) == Catch::Approx(1.0));
    REQUIRE(s.tail_mass(1) == Catch::Approx(0.0));
    REQUIRE(s.top_level_population() == Catch::Approx(1.0));
}

TEST_CASE("state file round trip is value-exact") {
    Rng rng(23);
    PureState s = random_state(2, 7, rng);
    std::stringstream ss;
    save_state(s, ss);
    LoadedState back = load_state(ss);
    REQUIRE(back.is_pure);
    REQUIRE(back.pure.modes() == 2);
    REQUIRE(back.pure.cutoff() == 7);
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
        REQUIRE(back.pure.amps()[i].real() == s.amps()[i].real());
        REQUIRE(back.pure.amps()[i].imag() == s.amps()[i].imag());
    }

    DensityState rho = test_helpers::random_density(1, 6, rng);
    std::stringstream ds;
    save_state(rho, ds);
    LoadedState dback = load_state(ds);
    REQUIRE(!dback.is_pure);
    REQUIRE((dback.density.rho() - rho.rho()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("density invariants on random mixed states") {
    Rng rng(29);
    DensityState rho = test_helpers::random_density(1, 10, rng);
    REQUIRE(rho.hermiticity_error() < 1e-10);
    REQUIRE(std::abs(rho.trace() - 1.0) < 1e-10);
    REQUIRE(rho.min_eigenvalue() > -1e-9);
}
