#pragma once

// Diagnostics: Wigner function (displaced-parity form), phase probability
// distribution, quadrature moments, fidelity, best-fit cat extraction and
// Wigner peak finding.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <vector>

#include "catsim/measurements.hpp"
#include "catsim/states.hpp"

namespace catsim {

struct WignerGrid {
    std::vector<double> q_axis, p_axis;
    // values[iq * p_axis.size() + ip]
    std::vector<double> values;
    double value(std::size_t iq, std::size_t ip) const { return values[iq * p_axis.size() + ip]; }

    double integral() const {
        if (q_axis.size() < 2 || p_axis.size() < 2) return 0.0;
        const double dq = q_axis[1] - q_axis[0], dp = p_axis[1] - p_axis[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < q_axis.size(); ++i)
            for (std::size_t j = 0; j < p_axis.size(); ++j) {
                double w = 1.0;
                if (i == 0 || i + 1 == q_axis.size()) w *= 0.5;
                if (j == 0 || j + 1 == p_axis.size()) w *= 0.5;
                acc += w * value(i, j);
            }
        return acc * dq * dp;
    }

    // marginal over p (trapezoid), indexed like q_axis
    std::vector<double> q_marginal() const {
        const double dp = p_axis[1] - p_axis[0];
        std::vector<double> out(q_axis.size(), 0.0);
        for (std::size_t i = 0; i < q_axis.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p_axis.size(); ++j) {
                double w = (j == 0 || j + 1 == p_axis.size()) ? 0.5 : 1.0;
                acc += w * value(i, j);
            }
            out[i] = acc * dp;
        }
        return out;
    }
};

struct GridSpec {
    double q_min = -6.0, q_max = 6.0;
    double p_min = -6.0, p_max = 6.0;
    double step = 0.05;
};

namespace detail {

inline double parity_weighted_norm(const Vec& u) {
    double result = 0.0;
    for (Eigen::Index m = 0; m < u.size(); ++m) {
        const double mag = std::norm(u[m]);
        result += (m % 2 == 0) ? mag : -mag;
    }
    return result;
}

}  // namespace detail

// W(q,p) = (2/pi) sum_n (-1)^n |<n| D(-(q+ip)) |psi>|^2. The displaced
// vectors are produced by marching across the grid in small displacement
// steps (phases between D factors drop inside |.|^2), which stays accurate
// over the whole grid.
inline WignerGrid wigner(const PureState& state, const GridSpec& grid = {}) {
    if (state.modes() != 1) throw std::invalid_argument("wigner: single-mode states only");
    if (grid.step > 0.2) std::cerr << "[catsim] warning: wigner grid step > 0.2 is coarse\n";
    PureState s = state.normalized();
    const int D = s.cutoff();
    WignerGrid out;
    for (double q = grid.q_min; q <= grid.q_max + 1e-12; q += grid.step) out.q_axis.push_back(q);
    for (double p = grid.p_min; p <= grid.p_max + 1e-12; p += grid.step) out.p_axis.push_back(p);
    const std::size_t nq = out.q_axis.size(), np = out.p_axis.size();
    out.values.resize(nq * np);
    const Mat stepq = displacement_matrix(cplx(-grid.step, 0.0), D);
    const Mat stepp = displacement_matrix(cplx(0.0, -grid.step), D);
    // vq = D(-q_min) psi
    Vec vq = s.amps();
    {
        const double a0 = -grid.q_min;
        const int n0 = static_cast<int>(std::floor(std::abs(a0) / grid.step));
        const double sgn = a0 >= 0 ? 1.0 : -1.0;
        const Mat first = displacement_matrix(cplx(sgn * grid.step, 0.0), D);
        for (int i = 0; i < n0; ++i) vq = first * vq;
        const double res = a0 - sgn * n0 * grid.step;
        if (std::abs(res) > 1e-14) vq = displacement_matrix(cplx(res, 0.0), D) * vq;
    }
    Vec u(D);
    for (std::size_t i = 0; i < nq; ++i) {
        // u = D(-i p_min) vq
        u = vq;
        {
            const double a0 = -grid.p_min;
            const int n0 = static_cast<int>(std::floor(std::abs(a0) / grid.step));
            const double sgn = a0 >= 0 ? 1.0 : -1.0;
            const Mat first = displacement_matrix(cplx(0.0, sgn * grid.step), D);
            for (int k = 0; k < n0; ++k) u = first * u;
            const double res = a0 - sgn * n0 * grid.step;
            if (std::abs(res) > 1e-14) u = displacement_matrix(cplx(0.0, res), D) * u;
        }
        for (std::size_t j = 0; j < np; ++j) {
            out.values[i * np + j] =
                2.0 / std::numbers::pi * detail::parity_weighted_norm(u);
            if (j + 1 < np) u = stepp * u;
        }
        if (i + 1 < nq) vq = stepq * vq;
    }
    return out;
}

inline WignerGrid wigner(const DensityState& state, const GridSpec& grid = {}) {
    if (state.modes() != 1) throw std::invalid_argument("wigner: single-mode states only");
    DensityState rho = state;
    rho.normalize();
    Eigen::SelfAdjointEigenSolver<Mat> es((rho.rho() + rho.rho().adjoint()) / 2.0);
    WignerGrid out;
    bool first = true;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()[i];
        if (lam < 1e-12) continue;
        PureState comp(es.eigenvectors().col(i), 1, state.cutoff());
        WignerGrid g = wigner(comp, grid);
        if (first) {
            out = g;
            for (auto& v : out.values) v *= lam;
            first = false;
        } else {
            for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += lam * g.values[k];
        }
    }
    return out;
}

struct PhaseDistribution {
    std::vector<double> phi_axis;  // [0, 2pi)
    std::vector<double> values;    // normalized density

    double integral() const {
        const double dphi = phi_axis.size() > 1 ? phi_axis[1] - phi_axis[0] : 0.0;
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc * dphi;  // periodic grid: plain sum is the right rule
    }

    std::size_t argmax() const {
        return std::distance(values.begin(), std::max_element(values.begin(), values.end()));
    }

    double max_over_min() const {
        auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        return *mn > 0 ? *mx / *mn : std::numeric_limits<double>::infinity();
    }
};

// P(phi) = (1/2pi) |sum_n c_n e^{i n phi}|^2 (mixed: (1/2pi) sum rho_nm e^{i(n-m)phi})
inline PhaseDistribution phase_distribution(const PureState& state, int n_phi = 512) {
    if (state.modes() != 1) throw std::invalid_argument("phase_distribution: single-mode only");
    PureState s = state.normalized();
    PhaseDistribution out;
    out.phi_axis.resize(n_phi);
    out.values.resize(n_phi);
    const int D = s.cutoff();
    for (int i = 0; i < n_phi; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n_phi;
        out.phi_axis[i] = phi;
        cplx acc(0, 0);
        for (int n = 0; n < D; ++n) acc += s.amps()[n] * std::exp(cplx(0, phi * n));
        out.values[i] = std::norm(acc) / (2.0 * std::numbers::pi);
    }
    return out;
}

inline PhaseDistribution phase_distribution(const DensityState& state, int n_phi = 512) {
    if (state.modes() != 1) throw std::invalid_argument("phase_distribution: single-mode only");
    DensityState rho = state;
    rho.normalize();
    PhaseDistribution out;
    out.phi_axis.resize(n_phi);
    out.values.resize(n_phi);
    const int D = rho.cutoff();
    for (int i = 0; i < n_phi; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n_phi;
        out.phi_axis[i] = phi;
        cplx acc(0, 0);
        for (int n = 0; n < D; ++n)
            for (int m = 0; m < D; ++m)
                acc += rho.rho()(n, m) * std::exp(cplx(0, phi * (n - m)));
        out.values[i] = std::max(acc.real(), 0.0) / (2.0 * std::numbers::pi);
    }
    return out;
}

// variance of q cos(theta) + p sin(theta); vacuum = 1/4
inline double quadrature_variance(const PureState& state, double theta) {
    if (state.modes() != 1) throw std::invalid_argument("quadrature_variance: single-mode only");
    PureState s = state.normalized();
    const int D = s.cutoff();
    const Mat op = std::cos(theta) * position_op(D) + std::sin(theta) * momentum_op(D);
    const Vec qv = op * s.amps();
    const double e1 = s.amps().dot(qv).real();
    const double e2 = qv.squaredNorm();
    return e2 - e1 * e1;
}

inline double quadrature_variance(const DensityState& state, double theta) {
    if (state.modes() != 1) throw std::invalid_argument("quadrature_variance: single-mode only");
    DensityState rho = state;
    rho.normalize();
    const int D = rho.cutoff();
    const Mat op = std::cos(theta) * position_op(D) + std::sin(theta) * momentum_op(D);
    const double e1 = (op * rho.rho()).trace().real();
    const double e2 = (op * op * rho.rho()).trace().real();
    return e2 - e1 * e1;
}

inline double mean_photon_number(const PureState& state) {
    PureState s = state.normalized();
    double acc = 0.0;
    for (int n = 0; n < s.cutoff(); ++n) acc += n * std::norm(s.amps()[n]);
    return acc;
}

// ---------------------------------------------------------------------------
// fidelity

inline double fidelity(const PureState& a, const PureState& b) {
    const double na = a.norm2(), nb = b.norm2();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::norm(inner(a, b)) / (na * nb);
}

inline double fidelity(const PureState& a, const DensityState& rho) {
    const double na = a.norm2(), tr = rho.trace();
    if (na == 0.0 || tr == 0.0) return 0.0;
    return (a.amps().adjoint() * rho.rho() * a.amps())(0).real() / (na * tr);
}

inline double fidelity(const DensityState& rho, const PureState& a) { return fidelity(a, rho); }

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2
inline double fidelity(const DensityState& rho_in, const DensityState& sigma_in) {
    DensityState rho = rho_in, sigma = sigma_in;
    rho.normalize();
    sigma.normalize();
    Eigen::SelfAdjointEigenSolver<Mat> es((rho.rho() + rho.rho().adjoint()) / 2.0);
    Vec sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Mat sqrt_rho = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().adjoint();
    Mat m = sqrt_rho * sigma.rho() * sqrt_rho;
    Eigen::SelfAdjointEigenSolver<Mat> es2((m + m.adjoint()) / 2.0);
    double tr = 0.0;
    for (int i = 0; i < es2.eigenvalues().size(); ++i)
        tr += std::sqrt(std::max(es2.eigenvalues()[i], 0.0));
    return tr * tr;
}

// ---------------------------------------------------------------------------
// best-fit cat extraction

struct CatFit {
    double alpha_fit = 0.0;
    double r_fit = 0.0;
    Parity parity_fit = Parity::even;
    double fidelity = 0.0;
    double delta_measured = 0.0;  // 1 / (2 sqrt(Var_p)) after axis alignment
    double axis = 0.0;            // principal axis angle in [0, pi)
};

namespace detail {

// axis angle of the state in phase space from the phase-distribution peak;
// P(phi) = |sum c_n e^{i n phi}|^2 peaks at minus the state angle
inline double principal_axis(const PhaseDistribution& pd) {
    const std::size_t i = pd.argmax();
    const std::size_t n = pd.values.size();
    const double lm = pd.values[(i + n - 1) % n], l0 = pd.values[i], lp = pd.values[(i + 1) % n];
    double shift = 0.0;
    const double denom = lm - 2 * l0 + lp;
    if (std::abs(denom) > 1e-300) shift = 0.5 * (lm - lp) / denom;
    const double dphi = pd.phi_axis[1] - pd.phi_axis[0];
    double peak = pd.phi_axis[i] + shift * dphi;
    double axis = std::fmod(-peak, std::numbers::pi);
    if (axis < 0) axis += std::numbers::pi;
    return axis;
}

template <typename F>
double golden_max(F&& f, double lo, double hi, int iters = 60) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters && (b - a) > 1e-10; ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return fc > fd ? c : d;
}

}  // namespace detail

// Fit a squeezed cat to the state: align the principal axis using the
// phase-distribution peak, set r from the p-quadrature variance, then
// maximize fidelity over the amplitude alone (golden section).
inline CatFit fit_cat(const PureState& state, int n_phi = 4096) {
    PureState s = state.normalized();
    const int D = s.cutoff();
    CatFit fit;
    fit.axis = detail::principal_axis(phase_distribution(s, n_phi));
    PureState rot = apply(*rotation(-fit.axis, D), s, 0);
    const double var_p = std::max(quadrature_variance(rot, std::numbers::pi / 2.0), 1e-12);
    fit.r_fit = 0.5 * std::log(4.0 * var_p);
    fit.delta_measured = 1.0 / (2.0 * std::sqrt(var_p));
    auto [even_pop, odd_pop] = rot.parity_populations();
    fit.parity_fit = even_pop >= odd_pop ? Parity::even : Parity::odd;
    const double alpha_hi = 2.0 * std::sqrt(std::max(mean_photon_number(rot), 1.0)) + 1.0;
    auto score = [&](double alpha) {
        return fidelity(cat(alpha, fit.r_fit, fit.parity_fit, D), rot);
    };
    // coarse scan to bracket the maximum, then golden polish
    double best_a = 0.0, best_f = score(1e-9);
    const int scan = 48;
    for (int i = 1; i <= scan; ++i) {
        const double a = alpha_hi * i / scan;
        const double f = score(a);
        if (f > best_f) {
            best_f = f;
            best_a = a;
        }
    }
    const double lo = std::max(0.0, best_a - alpha_hi / scan);
    const double hi = std::min(alpha_hi, best_a + alpha_hi / scan);
    const double a_star = detail::golden_max(score, lo, hi);
    fit.alpha_fit = score(a_star) >= best_f ? a_star : best_a;
    fit.fidelity = score(fit.alpha_fit);
    // degenerate states (vacuum-like) score flat near alpha = 0
    if (score(0.0) >= fit.fidelity - 1e-12) {
        fit.alpha_fit = 0.0;
        fit.fidelity = score(0.0);
    }
    return fit;
}

inline CatFit fit_cat(const DensityState& state, int n_phi = 4096) {
    DensityState rho = state;
    rho.normalize();
    const int D = rho.cutoff();
    CatFit fit;
    fit.axis = detail::principal_axis(phase_distribution(rho, n_phi));
    DensityState rot = apply(*rotation(-fit.axis, D), rho, 0);
    const double var_p = std::max(quadrature_variance(rot, std::numbers::pi / 2.0), 1e-12);
    fit.r_fit = 0.5 * std::log(4.0 * var_p);
    fit.delta_measured = 1.0 / (2.0 * std::sqrt(var_p));
    auto [even_pop, odd_pop] = rot.parity_populations();
    fit.parity_fit = even_pop >= odd_pop ? Parity::even : Parity::odd;
    double mean_n = 0.0;
    for (int n = 0; n < D; ++n) mean_n += n * rot.rho()(n, n).real();
    const double alpha_hi = 2.0 * std::sqrt(std::max(mean_n, 1.0)) + 1.0;
    auto score = [&](double alpha) {
        return fidelity(cat(alpha, fit.r_fit, fit.parity_fit, D), rot);
    };
    double best_a = 0.0, best_f = score(1e-9);
    const int scan = 48;
    for (int i = 1; i <= scan; ++i) {
        const double a = alpha_hi * i / scan;
        const double f = score(a);
        if (f > best_f) {
            best_f = f;
            best_a = a;
        }
    }
    const double a_star = detail::golden_max(score, std::max(0.0, best_a - alpha_hi / scan),
                                             std::min(alpha_hi, best_a + alpha_hi / scan));
    fit.alpha_fit = score(a_star) >= best_f ? a_star : best_a;
    fit.fidelity = score(fit.alpha_fit);
    if (score(0.0) >= fit.fidelity - 1e-12) {
        fit.alpha_fit = 0.0;
        fit.fidelity = score(0.0);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// peak finding

struct WignerPeak {
    double q, p, value;
};

// 8-neighbor local maxima above 5% of the global maximum, sorted by value
inline std::vector<WignerPeak> find_wigner_peaks(const WignerGrid& grid) {
    std::vector<WignerPeak> peaks;
    const std::size_t nq = grid.q_axis.size(), np = grid.p_axis.size();
    double global = 0.0;
    for (double v : grid.values) global = std::max(global, v);
    const double floor_v = 0.05 * global;
    for (std::size_t i = 1; i + 1 < nq; ++i)
        for (std::size_t j = 1; j + 1 < np; ++j) {
            const double v = grid.value(i, j);
            if (v <= floor_v) continue;
            bool is_max = true;
            for (int di = -1; di <= 1 && is_max; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (grid.value(i + di, j + dj) > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) peaks.push_back({grid.q_axis[i], grid.p_axis[j], v});
        }
    std::sort(peaks.begin(), peaks.end(),
              [](const WignerPeak& a, const WignerPeak& b) { return a.value > b.value; });
    return peaks;
}

// local maxima of a 1-d marginal above 5% of its maximum, sorted by position
inline std::vector<std::pair<double, double>> find_marginal_peaks(
    const std::vector<double>& axis, const std::vector<double>& density) {
    std::vector<std::pair<double, double>> out;
    double global = 0.0;
    for (double v : density) global = std::max(global, v);
    for (std::size_t i = 1; i + 1 < density.size(); ++i)
        if (density[i] > 0.05 * global && density[i] >= density[i - 1] &&
            density[i] > density[i + 1])
            out.emplace_back(axis[i], density[i]);
    return out;
}

// ---------------------------------------------------------------------------
// CSV output (12 significant digits)

inline void wigner_to_csv(const WignerGrid& grid, std::ostream& os) {
    os << "q,p,value\n";
    char buf[128];
    for (std::size_t i = 0; i < grid.q_axis.size(); ++i)
        for (std::size_t j = 0; j < grid.p_axis.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", grid.q_axis[i], grid.p_axis[j],
                          grid.value(i, j));
            os << buf;
        }
}

inline void phase_to_csv(const PhaseDistribution& pd, std::ostream& os) {
    os << "phi,value\n";
    char buf[96];
    for (std::size_t i = 0; i < pd.phi_axis.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", pd.phi_axis[i], pd.values[i]);
        os << buf;
    }
}

}  // namespace catsim
