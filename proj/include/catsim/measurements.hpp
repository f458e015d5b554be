#pragma once

// Measurement primitives: photon-number-resolving detection (enumerated and
// seeded-sampled), homodyne quadrature projection, inline-squeezed PNRD, and
// the two-squeezer 4-cat measurement.
//
// All projections return unnormalized post-states with the branch weight
// (or probability density) separate.

#include <cmath>
#include <numbers>
#include <vector>

#include "catsim/gaussian.hpp"
#include "catsim/rng.hpp"

namespace catsim {

struct MeasurementOutcome {
    enum class Kind { pnrd, homodyne } kind = Kind::pnrd;
    int m = 0;            // PNRD photon count
    double x = 0.0;       // homodyne outcome
    double probability = 0.0;  // branch weight (PNRD) or density (homodyne)
    PureState post_state;      // unnormalized, one fewer mode
};

// quadrature eigenbra overlaps <x|n> at hbar = 1/2 (Var_q(|0>) = 1/4):
// <x|n> = 2^{1/4} psi_n(sqrt(2) x) with psi_n the standard Hermite functions,
// computed by the stable upward recurrence
inline Eigen::VectorXd quadrature_bra(double x, int cutoff) {
    const double y = std::sqrt(2.0) * x;
    Eigen::VectorXd u(cutoff);
    u[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * y * y);
    if (cutoff > 1) u[1] = std::sqrt(2.0) * y * u[0];
    for (int n = 2; n < cutoff; ++n)
        u[n] = std::sqrt(2.0 / n) * y * u[n - 1] - std::sqrt(double(n - 1) / n) * u[n - 2];
    return std::pow(2.0, 0.25) * u;
}

inline std::vector<MeasurementOutcome> pnrd_enumerate(const PureState& s, int mode, int m_max) {
    if (m_max >= s.cutoff()) throw std::invalid_argument("pnrd_enumerate: m_max >= cutoff");
    std::vector<MeasurementOutcome> out;
    out.reserve(m_max + 1);
    for (int m = 0; m <= m_max; ++m) {
        Vec bra = Vec::Zero(s.cutoff());
        bra[m] = 1.0;
        auto [post, w] = project_mode(s, mode, bra);
        out.push_back({MeasurementOutcome::Kind::pnrd, m, 0.0, w, std::move(post)});
    }
    return out;
}

// branch weights over all m for the given mode, without building post-states
inline std::vector<double> pnrd_weights(const PureState& s, int mode) {
    const int D = s.cutoff();
    const std::int64_t inner = ipow(D, s.modes() - 1 - mode);
    const std::int64_t outer = ipow(D, mode);
    std::vector<double> w(D, 0.0);
    for (std::int64_t o = 0; o < outer; ++o)
        for (int n = 0; n < D; ++n) {
            const std::int64_t base = (o * D + n) * inner;
            for (std::int64_t i = 0; i < inner; ++i) w[n] += std::norm(s.amps()[base + i]);
        }
    return w;
}

inline MeasurementOutcome pnrd_sample(const PureState& s, int mode, Rng& rng) {
    auto w = pnrd_weights(s, mode);
    double total = 0.0;
    for (double v : w) total += v;
    if (total <= 0.0) throw std::runtime_error("pnrd_sample: zero-norm state");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int pick = -1;
    for (int m = 0; m < s.cutoff(); ++m) {
        if (w[m] <= 0.0) continue;  // zero-weight outcomes are never drawn
        acc += w[m];
        if (u < acc) {
            pick = m;
            break;
        }
    }
    if (pick < 0)
        for (int m = s.cutoff() - 1; m >= 0; --m)
            if (w[m] > 0.0) {
                pick = m;
                break;
            }
    Vec bra = Vec::Zero(s.cutoff());
    bra[pick] = 1.0;
    auto [post, weight] = project_mode(s, mode, bra);
    return {MeasurementOutcome::Kind::pnrd, pick, 0.0, weight, std::move(post)};
}

inline MeasurementOutcome pnrd_sample(const PureState& s, int mode, std::uint64_t seed) {
    Rng rng(seed);
    return pnrd_sample(s, mode, rng);
}

// PNRD on one mode of a density state, sampling from the diagonal weights
inline std::pair<DensityState, int> pnrd_sample(const DensityState& rho, int mode, Rng& rng) {
    const int D = rho.cutoff();
    std::vector<double> w(D, 0.0);
    for (int m = 0; m < D; ++m) {
        // weight = Tr[(I x |m><m|) rho]
        const std::int64_t inner = ipow(D, rho.modes() - 1 - mode);
        const std::int64_t outer = ipow(D, mode);
        for (std::int64_t o = 0; o < outer; ++o)
            for (std::int64_t i = 0; i < inner; ++i) {
                const std::int64_t idx = (o * D + m) * inner + i;
                w[m] += rho.rho()(idx, idx).real();
            }
    }
    double total = 0.0;
    for (double v : w) total += std::max(v, 0.0);
    if (total <= 0.0) throw std::runtime_error("pnrd_sample(density): zero-trace state");
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int pick = D - 1;
    for (int m = 0; m < D; ++m) {
        if (w[m] <= 0.0) continue;
        acc += w[m];
        if (u < acc) {
            pick = m;
            break;
        }
    }
    auto [post, weight] = project_mode_fock(rho, mode, pick);
    (void)weight;
    return {std::move(post), pick};
}

// Project the quadrature q cos(angle) + p sin(angle) at outcome x:
// bra coefficients <x| R(−angle) |n> = e^{−i n angle} <x|n>.
// Returns the unnormalized post-state and the probability density.
inline std::pair<PureState, double> homodyne_project(const PureState& s, int mode, double x,
                                                     double quadrature_angle = 0.0) {
    Eigen::VectorXd h = quadrature_bra(x, s.cutoff());
    Vec bra(s.cutoff());
    for (int n = 0; n < s.cutoff(); ++n)
        bra[n] = h[n] * std::exp(cplx(0, -quadrature_angle * n));
    return project_mode(s, mode, bra);
}

// Inline squeeze S(r, theta) on `mode` followed by PNRD outcome m. The
// contraction uses the exact bra row <m| S(r,theta), which equals applying
// the squeezer and then projecting onto |m>.
inline std::pair<PureState, double> squeezed_pnrd(const PureState& s, int mode, double r,
                                                  double theta, int m) {
    if (m < 0 || m >= s.cutoff()) throw std::invalid_argument("squeezed_pnrd: bad m");
    auto sq = squeeze(r, theta, s.cutoff());
    Vec bra = sq->matrix.row(m).transpose();
    return project_mode(s, mode, bra);
}

// ---------------------------------------------------------------------------
// 4-cat projective measurement: split the mode on a balanced beamsplitter
// with vacuum, squeeze one arm along q and the other along p, detect both
// with PNRDs. Projects onto an approximate four-component cat.

struct FourCatSpec {
    int m1 = 0, m2 = 0;
    double r = 0.0;
    double beta_amplitude() const { return std::sqrt(2.0 * (m1 + m2)) * std::exp(-std::abs(r)); }
    double theta1() const {
        if (m2 == 0) return std::numbers::pi / 2.0;
        return std::atan(std::sqrt(double(m1) / double(m2)));
    }
};

// Effective single-mode POVM element |E_{m1,m2}> obtained by pushing each
// Fock basis vector through the measurement circuit.
inline PureState fourcat_povm_element(int m1, int m2, double r, int cutoff) {
    const int D = cutoff;
    const Mat sq = squeeze_matrix(r, 0.0, D);                    // arm 1, q direction
    const Mat sp = squeeze_matrix(r, std::numbers::pi / 2.0, D); // arm 2, p direction
    Vec e(D);
    PureState vac = make_fock(0, D);
    for (int n = 0; n < D; ++n) {
        PureState joint = tensor(make_fock(n, D), vac);
        apply_beamsplitter(joint, 0, 1, 0.5);
        // amplitude <m1, m2| (S_q x S_p) B |n, 0>
        cplx amp(0, 0);
        for (int a = 0; a < D; ++a) {
            if (sq(m1, a) == cplx(0, 0)) continue;
            cplx inner_sum(0, 0);
            for (int b = 0; b < D; ++b)
                inner_sum += sp(m2, b) * joint.amps()[std::int64_t(a) * D + b];
            amp += sq(m1, a) * inner_sum;
        }
        e[n] = std::conj(amp);
    }
    return PureState(std::move(e), 1, D);
}

// Apply the 4-cat measurement with outcomes (m1, m2) to `mode` of a state.
inline std::pair<PureState, double> fourcat_measure(const PureState& s, int mode, double r,
                                                    int m1, int m2) {
    PureState E = fourcat_povm_element(m1, m2, r, s.cutoff());
    Vec bra = E.amps().conjugate();
    return project_mode(s, mode, bra);
}

}  // namespace catsim
