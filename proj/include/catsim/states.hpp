#pragma once

// Named single-mode states: coherent, displaced-squeezed, squeezed cats,
// physical square-lattice GKP states, squeezed Fock states.

#include <cmath>
#include <numbers>

#include "catsim/gaussian.hpp"

namespace catsim {

enum class Parity { even = 0, odd = 1 };

inline PureState coherent(cplx alpha, int cutoff) {
    Vec v(cutoff);
    // c_n = e^{-|a|^2/2} alpha^n / sqrt(n!), via running product for stability
    cplx run = std::exp(-0.5 * std::norm(alpha));
    v[0] = run;
    for (int n = 1; n < cutoff; ++n) {
        run *= alpha / std::sqrt(double(n));
        v[n] = run;
    }
    return PureState(std::move(v), 1, cutoff);
}

// |alpha, r> = D(alpha) S(r) |0>, displacement along q for real alpha.
// Amplitudes in closed form,
//   c_n = sech(r)^{1/2} e^{-alpha^2 (1+tanh r)/2}
//         (tanh r)^{n/2} / sqrt(2^n n!)  H_n(alpha e^r / sqrt(sinh 2r)),
// evaluated with a normalized Hermite recurrence whose intermediates stay
// bounded relative to the peak amplitude, so the construction is stable for
// any displacement (matrix routes lose ~e^{alpha^2/2} digits instead).
inline PureState displaced_squeezed(double alpha_real, double r, int cutoff) {
    if (r == 0.0) return coherent(cplx(alpha_real, 0.0), cutoff);
    if (r < 0.0) {
        // anti-squeezed components only appear at small amplitude; the
        // matrix route is adequate there
        Vec sv = squeeze_matrix(r, 0.0, cutoff).col(0);
        Vec out = displacement_matrix(cplx(alpha_real, 0.0), cutoff) * sv;
        return PureState(std::move(out), 1, cutoff);
    }
    const double t = std::tanh(r);
    const double x0 = alpha_real * std::exp(r) / std::sqrt(std::sinh(2.0 * r));
    const double logpref =
        -0.5 * std::log(std::cosh(r)) - 0.5 * alpha_real * alpha_real * (1.0 + t);
    // f_n = t^{n/2} H_n(x0) / sqrt(2^n n!):
    //   f_{n+1} = x0 sqrt(2t/(n+1)) f_n - t sqrt(n/(n+1)) f_{n-1}
    Vec v(cutoff);
    double fm1 = 0.0, f = 1.0;
    double log_scale = logpref;  // rescale on the fly to dodge overflow
    v[0] = std::exp(log_scale) * f;
    for (int n = 0; n + 1 < cutoff; ++n) {
        const double fp = x0 * std::sqrt(2.0 * t / (n + 1)) * f -
                          t * std::sqrt(double(n) / (n + 1)) * fm1;
        fm1 = f;
        f = fp;
        const double mag = std::max(std::abs(f), std::abs(fm1));
        if (mag > 1e150) {
            fm1 /= 1e150;
            f /= 1e150;
            log_scale += std::log(1e150);
        }
        v[n + 1] = std::exp(log_scale) * f;
    }
    return PureState(std::move(v), 1, cutoff);
}

struct CatSpec {
    double alpha = 0.0;  // >= 0
    double r = 0.0;
    Parity parity = Parity::even;
    int cutoff = 0;
};

// N (|alpha,r> ± |−alpha,r>); the minus component is the exact photon-parity
// flip of the plus one, so cross-parity amplitudes cancel identically
inline PureState cat(const CatSpec& spec) {
    if (spec.alpha < 0) throw std::invalid_argument("cat: alpha must be >= 0");
    PureState comp = displaced_squeezed(spec.alpha, spec.r, spec.cutoff);
    Vec v(spec.cutoff);
    const double sign = spec.parity == Parity::even ? 1.0 : -1.0;
    for (int n = 0; n < spec.cutoff; ++n) {
        const double flip = (n % 2 == 0) ? 1.0 : -1.0;
        v[n] = comp.amps()[n] * (1.0 + sign * flip);
    }
    PureState out(std::move(v), 1, spec.cutoff);
    out.normalize();
    return out;
}

inline PureState cat(double alpha, double r, Parity parity, int cutoff) {
    return cat(CatSpec{alpha, r, parity, cutoff});
}

struct GkpSpec {
    double delta = 1.0;  // in (0, 1]
    int logical = 0;     // 0 or 1
    int u_max = -1;      // envelope truncation; -1 = auto (weight < 1e-8)
    int cutoff = 0;
};

inline int gkp_auto_umax(double delta, int logical) {
    int u = 0;
    const double c = std::numbers::pi / 2.0 * delta * delta;
    while (true) {
        const int m = 2 * (u + 1) + logical;
        if (std::exp(-c * m * m) < 1e-8) return u + 1;
        ++u;
        if (u > 64) return 64;
    }
}

// physical square GKP basis state: Gaussian-envelope comb of displaced
// squeezed components at spacing multiples of sqrt(pi/2), squeeze -ln(delta)
inline PureState gkp(const GkpSpec& spec) {
    if (spec.delta <= 0.0 || spec.delta > 1.0)
        throw std::invalid_argument("gkp: delta must be in (0,1]");
    if (spec.logical != 0 && spec.logical != 1)
        throw std::invalid_argument("gkp: logical must be 0 or 1");
    const int umax = spec.u_max >= 0 ? spec.u_max : gkp_auto_umax(spec.delta, spec.logical);
    const double s = std::sqrt(std::numbers::pi / 2.0);
    const double r = -std::log(spec.delta);
    const double c = std::numbers::pi / 2.0 * spec.delta * spec.delta;
    Vec acc = Vec::Zero(spec.cutoff);
    for (int u = -umax; u <= umax; ++u) {
        const int m = 2 * u + spec.logical;
        const double w = std::exp(-c * double(m) * m);
        if (w < 1e-14) continue;
        acc += w * displaced_squeezed(m * s, r, spec.cutoff).amps();
    }
    PureState out(std::move(acc), 1, spec.cutoff);
    if (out.tail_mass(0) > 1e-4)
        throw CutoffExceeded("gkp: tail mass " + std::to_string(out.tail_mass(0)) +
                             " at cutoff " + std::to_string(spec.cutoff));
    out.normalize();
    return out;
}

// Eq.-4-style target: the two central components of the logical-1 comb,
// i.e. an even squeezed cat at alpha = sqrt(pi/2), r = -ln(delta)
inline PureState target_state(double delta, int cutoff) {
    return cat(std::sqrt(std::numbers::pi / 2.0), -std::log(delta), Parity::even, cutoff);
}

inline PureState squeezed_fock(int n, double r, int cutoff) {
    if (n >= cutoff) throw CutoffExceeded("squeezed_fock: n >= cutoff");
    Vec v = squeeze_matrix(r, 0.0, cutoff).col(n);
    return PureState(std::move(v), 1, cutoff);
}

// mean photon number of S(r)|n>: (2n+1) sinh^2 r + n
inline double squeezed_fock_mean_photons(int n, double r) {
    const double sh = std::sinh(r);
    return (2.0 * n + 1.0) * sh * sh + n;
}

// P(at least n_cutoff photons) for the (normalized) truncated squeezed Fock state
inline double cutoff_probability(int n, double r, int n_cutoff, int cutoff) {
    if (n_cutoff <= 0) return 1.0;
    PureState s = squeezed_fock(n, r, cutoff).normalized();
    double tail = 0.0;
    for (int k = std::min(n_cutoff, cutoff); k < cutoff; ++k) tail += std::norm(s.amps()[k]);
    return tail;
}

}  // namespace catsim
