#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "catsim/gaussian.hpp"
#include "catsim/states.hpp"
#include "test_helpers.hpp"

using namespace catsim;
using std::numbers::pi;

namespace {

// independent construction by scaling-and-squaring on the truncated
// generator; cross-checks the exact-element builders on low Fock levels
Mat expm_displacement(cplx alpha, int D) {
    Mat a = annihilation(D);
    Mat G = alpha * a.adjoint() - std::conj(alpha) * a;
    return G.exp();
}

Mat expm_squeeze(double r, double theta, int D) {
    Mat a = annihilation(D);
    Mat aa = a * a;
    Mat G = 0.5 * r * (aa * std::exp(cplx(0, -2 * theta)) -
                       aa.adjoint() * std::exp(cplx(0, 2 * theta)));
    return G.exp();
}

double subblock_unitarity_defect(const Mat& U, int upto) {
    Mat d = U.adjoint() * U - Mat::Identity(U.rows(), U.cols());
    return d.topLeftCorner(upto, upto).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("displacement: identity, coherent overlap, inverse") {
    const int D = 40;
    auto d0 = displacement(cplx(0, 0), D);
    REQUIRE((d0->matrix - Mat::Identity(D, D)).cwiseAbs().maxCoeff() < 1e-14);

    // |<0|D(1)|0>|^2 = e^{-1}
    auto d1 = displacement(cplx(1, 0), D);
    REQUIRE(std::norm(d1->matrix(0, 0)) == Catch::Approx(std::exp(-1.0)).margin(1e-9));

    // series cross-check of the same overlap: sum_n |c_n|^2 with c_n of |alpha=1>
    PureState coh = coherent(cplx(1, 0), D);
    REQUIRE(std::norm(coh.amps()[0]) == Catch::Approx(std::exp(-1.0)).margin(1e-12));

    Mat prod = d1->matrix * displacement(cplx(-1, 0), D)->matrix;
    REQUIRE(prod.topLeftCorner(D / 2, D / 2).isApprox(
        Mat::Identity(D, D).topLeftCorner(D / 2, D / 2), 1e-9));
}

TEST_CASE("displacement matches truncated-generator exponential on low levels") {
    const int D = 50;
    const cplx alpha(0.8, -0.4);
    Mat exact = displacement_matrix(alpha, D);
    Mat viaexp = expm_displacement(alpha, D);
    REQUIRE((exact.topLeftCorner(20, 20) - viaexp.topLeftCorner(20, 20)).cwiseAbs().maxCoeff() <
            1e-9);
}

TEST_CASE("squeeze: identity, variance, angle conjugation") {
    const int D = 60;
    auto s0 = squeeze(0.0, 0.0, D);
    REQUIRE((s0->matrix - Mat::Identity(D, D)).cwiseAbs().maxCoeff() == 0.0);

    // Var_q(S(r)|0>) = e^{-2r}/4 at the 6 dB point r = 6 ln10 / 20
    const double r = db_to_r(6.0);
    PureState sv(squeeze_matrix(r, 0.0, D).col(0), 1, D);
    Mat q = position_op(D);
    Vec qs = q * sv.amps();
    const double var = qs.squaredNorm() - std::pow(sv.amps().dot(qs).real(), 2);
    REQUIRE(var == Catch::Approx(std::exp(-2 * r) / 4.0).margin(1e-6));

    // S(r,theta) = R(theta) S(r,0) R(-theta)
    const double th = 0.83;
    Mat lhs = squeeze_matrix(0.7, th, D);
    Mat rhs = rotation_matrix(th, D) * squeeze_matrix(0.7, 0.0, D) * rotation_matrix(-th, D);
    REQUIRE((lhs.topLeftCorner(40, 40) - rhs.topLeftCorner(40, 40)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("squeeze recurrence matches truncated-generator exponential on low levels") {
    const int D = 90;
    Mat exact = squeeze_matrix(0.8, 0.37, D);
    Mat viaexp = expm_squeeze(0.8, 0.37, D);
    REQUIRE((exact.topLeftCorner(16, 16) - viaexp.topLeftCorner(16, 16)).cwiseAbs().maxCoeff() <
            1e-9);
}

TEST_CASE("squeeze_element agrees with the recurrence matrix") {
    const int D = 24;
    Mat S = squeeze_matrix(0.8, 0.0, D);
    for (int m = 0; m < D; ++m)
        for (int n = 0; n < D; ++n)
            REQUIRE(std::abs(S(m, n).real() - squeeze_element(m, n, 0.8)) < 1e-12);
}

TEST_CASE("rotation: diagonal phases and coherent covariance") {
    const int D = 40;
    REQUIRE((rotation_matrix(0.0, D) - Mat::Identity(D, D)).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((rotation_matrix(2 * pi, D) - Mat::Identity(D, D)).cwiseAbs().maxCoeff() < 1e-12);

    const double th = 1.1;
    PureState rotated = apply(*rotation(th, D), coherent(cplx(1.2, 0.3), D), 0);
    PureState direct = coherent(cplx(1.2, 0.3) * std::exp(cplx(0, th)), D);
    REQUIRE(std::norm(inner(rotated, direct)) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("beamsplitter: identity, HOM sign, photon-number blocks") {
    const int D = 8;
    auto b1 = beamsplitter(1.0, D);
    REQUIRE((b1->matrix - Mat::Identity(D * D, D * D)).cwiseAbs().maxCoeff() < 1e-12);

    // B(1/2)|1,1> = (|2,0> - |0,2>)/sqrt2 in this convention
    PureState in = tensor(make_fock(1, D), make_fock(1, D));
    PureState out = apply(*beamsplitter(0.5, D), in, 0, 1);
    REQUIRE(out.amps()[2 * D + 0].real() == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-9));
    REQUIRE(out.amps()[0 * D + 2].real() == Catch::Approx(-1.0 / std::sqrt(2.0)).margin(1e-9));
    REQUIRE(std::abs(out.amps()[1 * D + 1]) < 1e-12);

    // no coupling between different total photon numbers
    const Mat& B = beamsplitter(0.37, D)->matrix;
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int c = 0; c < D; ++c)
                for (int d = 0; d < D; ++d)
                    if (a + b != c + d) REQUIRE(std::abs(B(a * D + b, c * D + d)) < 1e-12);
}

TEST_CASE("beamsplitter composition adds mixing angles") {
    const int D = 10;
    const double eta1 = 0.8, eta2 = 0.65;
    const double phi = std::acos(std::sqrt(eta1)) + std::acos(std::sqrt(eta2));
    const double eta12 = std::cos(phi) * std::cos(phi);
    Mat composed = beamsplitter(eta2, D)->matrix * beamsplitter(eta1, D)->matrix;
    Mat direct = beamsplitter(eta12, D)->matrix;
    REQUIRE((composed - direct).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("block apply equals dense beamsplitter") {
    const int D = 7;
    Rng rng(31);
    PureState s = test_helpers::random_state(2, D, rng);
    PureState dense = apply(*beamsplitter(0.42, D), s, 0, 1);
    PureState blocks = s;
    apply_beamsplitter(blocks, 0, 1, 0.42);
    REQUIRE(test_helpers::max_abs_diff(dense.amps(), blocks.amps()) < 1e-12);
}

TEST_CASE("sum gate: norm, mean addition, inverse") {
    const int D = 24;
    auto sg = sum_gate(D);

    PureState sq1(squeeze_matrix(0.4, 0.0, D).col(0), 1, D);
    PureState joint = tensor(sq1, sq1);
    PureState out = apply(*sg, joint, 0, 1);
    REQUIRE(out.norm2() == Catch::Approx(1.0).margin(1e-9));

    // <q2> after = <q1> + <q2> before, coherent inputs 0.5 and 0.3
    PureState c = tensor(coherent(cplx(0.5, 0), D), coherent(cplx(0.3, 0), D));
    PureState cg = apply(*sg, c, 0, 1);
    Mat q = position_op(D);
    Mat q2full = Mat::Zero(D * D, D * D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int bb = 0; bb < D; ++bb) q2full(a * D + b, a * D + bb) = q(b, bb);
    const double mean_q2 = (cg.amps().adjoint() * q2full * cg.amps())(0).real() / cg.norm2();
    REQUIRE(mean_q2 == Catch::Approx(0.8).margin(1e-6));

    // inverse returns the input
    PureState back = cg;
    apply_sum_gate(back, 0, 1, /*inverse=*/true);
    REQUIRE(test_helpers::max_abs_diff(back.amps(), c.amps()) < 1e-8);
}

TEST_CASE("taylor-applied sum gate matches dense construction") {
    const int D = 14;
    Rng rng(37);
    PureState s = test_helpers::random_state(2, D, rng);
    PureState dense = apply(*sum_gate(D), s, 0, 1);
    PureState taylor = s;
    apply_sum_gate(taylor, 0, 1);
    REQUIRE((dense.amps() - taylor.amps()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("unitarity away from the truncation edge") {
    // The matrices carry the exact elements of the infinite-dimensional
    // unitaries, so U†U deviates from I only where a tested column spreads
    // mass past the cutoff: displacement shifts a column by ~2|alpha| sqrt(n),
    // squeezing stretches it by e^{2r}. Blocks below that edge must be
    // unitary to 1e-9.
    REQUIRE(subblock_unitarity_defect(displacement_matrix(cplx(0.15, 0.1), 120),
                                      static_cast<int>(0.9 * 120)) < 1e-9);
    REQUIRE(subblock_unitarity_defect(displacement_matrix(cplx(0.7, 0.2), 80), 48) < 1e-9);
    REQUIRE(subblock_unitarity_defect(squeeze_matrix(0.35, 0.5, 100), 25) < 1e-9);
    REQUIRE(subblock_unitarity_defect(squeeze_matrix(0.2, 0.9, 100), 40) < 1e-9);
    REQUIRE(subblock_unitarity_defect(rotation_matrix(1.3, 40), 40) < 1e-12);
}

TEST_CASE("norm conservation under unitaries") {
    const int D = 48;
    Rng rng(41);
    PureState s = test_helpers::random_state(1, 10, rng);
    // embed into a larger space so the unitary acts below truncation
    Vec big = Vec::Zero(D);
    big.head(10) = s.amps();
    PureState bs(std::move(big), 1, D);
    PureState out = apply(*squeeze(0.25, 0.2, D), bs, 0);
    REQUIRE(std::abs(out.norm2() - bs.norm2()) < 1e-12);
}

TEST_CASE("reorder identity D(a) S(r) = S(r) D(a e^r)") {
    const int D = 140;
    const double r = 0.5, alpha = 1.0;
    Mat lhs = displacement_matrix(cplx(alpha, 0), D) * squeeze_matrix(r, 0.0, D);
    Mat rhs = squeeze_matrix(r, 0.0, D) * displacement_matrix(cplx(alpha * std::exp(r), 0), D);
    REQUIRE((lhs.topLeftCorner(30, 30) - rhs.topLeftCorner(30, 30)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("constructors are deterministic") {
    const int D = 25;
    Mat a = squeeze_matrix(0.61, 1.07, D);
    Mat b = squeeze_matrix(0.61, 1.07, D);
    REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
    Mat da = displacement_matrix(cplx(0.3, 0.4), D);
    Mat db = displacement_matrix(cplx(0.3, 0.4), D);
    REQUIRE((da - db).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("displacement warns above cutoff/4") {
    // behavioral smoke test only: the warning goes to stderr and the result
    // is still returned
    auto op = displacement(cplx(4.0, 0.0), 20);
    REQUIRE(op->cutoff == 20);
}
