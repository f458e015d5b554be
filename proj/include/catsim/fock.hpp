#pragma once

// Truncated Fock-space states and operator application.
//
// Conventions used throughout the library:
//   - one mode holds Fock levels 0..cutoff-1
//   - multi-mode amplitudes are stored flat in row-major mode order:
//     the FIRST mode is the slowest index, i.e. for two modes
//     amps[n0 * cutoff + n1]
//   - states are carried unnormalized through measurement cascades;
//     normalization is always an explicit call

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "catsim/errors.hpp"

namespace catsim {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline std::int64_t ipow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

class PureState {
public:
    PureState() = default;

    PureState(Vec amplitudes, int modes, int cutoff)
        : amps_(std::move(amplitudes)), modes_(modes), cutoff_(cutoff) {
        if (amps_.size() != ipow(cutoff_, modes_))
            throw std::invalid_argument("PureState: amplitude length != cutoff^modes");
        refresh_norm();
    }

    static PureState zero(int modes, int cutoff) {
        return PureState(Vec::Zero(ipow(cutoff, modes)), modes, cutoff);
    }

    const Vec& amps() const { return amps_; }
    Vec& amps() { return amps_; }
    int modes() const { return modes_; }
    int cutoff() const { return cutoff_; }
    Eigen::Index dim() const { return amps_.size(); }

    double norm2() const { return norm_cache_; }
    double norm() const { return std::sqrt(norm_cache_); }

    // Recompute the cached squared norm after in-place edits of amps().
    void refresh_norm() { norm_cache_ = amps_.squaredNorm(); }

    void normalize() {
        double n = norm();
        if (n == 0.0) throw std::runtime_error("PureState::normalize: zero state");
        amps_ /= n;
        refresh_norm();
    }

    PureState normalized() const {
        PureState s = *this;
        s.normalize();
        return s;
    }

    // population of the top Fock level of `mode`, relative to the total
    double tail_mass(int mode) const {
        check_mode(mode);
        if (norm_cache_ == 0.0) return 0.0;
        const std::int64_t stride = ipow(cutoff_, modes_ - 1 - mode);
        const std::int64_t block = stride * cutoff_;
        double t = 0.0;
        for (std::int64_t base = 0; base < dim(); base += block)
            for (std::int64_t i = 0; i < stride; ++i)
                t += std::norm(amps_[base + stride * (cutoff_ - 1) + i]);
        return t / norm_cache_;
    }

    // worst tail over all modes; the truncation-error proxy
    double top_level_population() const {
        double t = 0.0;
        for (int m = 0; m < modes_; ++m) t = std::max(t, tail_mass(m));
        return t;
    }

    // (even, odd) photon-number-parity populations, relative to the total
    std::pair<double, double> parity_populations() const {
        double even = 0.0, odd = 0.0;
        for (std::int64_t i = 0; i < dim(); ++i) {
            std::int64_t rest = i;
            int total = 0;
            for (int m = 0; m < modes_; ++m) {
                total += static_cast<int>(rest % cutoff_);
                rest /= cutoff_;
            }
            (total % 2 == 0 ? even : odd) += std::norm(amps_[i]);
        }
        double tot = even + odd;
        if (tot == 0.0) return {0.0, 0.0};
        return {even / tot, odd / tot};
    }

    void check_mode(int mode) const {
        if (mode < 0 || mode >= modes_) throw std::invalid_argument("mode index out of range");
    }

private:
    Vec amps_;
    int modes_ = 1;
    int cutoff_ = 1;
    double norm_cache_ = 0.0;
};

class DensityState {
public:
    DensityState() = default;

    DensityState(Mat matrix, int modes, int cutoff)
        : rho_(std::move(matrix)), modes_(modes), cutoff_(cutoff) {
        if (rho_.rows() != ipow(cutoff_, modes_) || rho_.cols() != rho_.rows())
            throw std::invalid_argument("DensityState: matrix dimension != cutoff^modes");
    }

    static DensityState from_pure(const PureState& psi) {
        return DensityState(psi.amps() * psi.amps().adjoint(), psi.modes(), psi.cutoff());
    }

    const Mat& rho() const { return rho_; }
    Mat& rho() { return rho_; }
    int modes() const { return modes_; }
    int cutoff() const { return cutoff_; }
    Eigen::Index dim() const { return rho_.rows(); }

    double trace() const { return rho_.trace().real(); }

    void normalize() {
        double t = trace();
        if (t == 0.0) throw std::runtime_error("DensityState::normalize: zero trace");
        rho_ /= t;
    }

    double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Mat> es((rho_ + rho_.adjoint()) / 2.0);
        return es.eigenvalues().minCoeff();
    }

    double tail_mass(int mode) const {
        if (mode < 0 || mode >= modes_) throw std::invalid_argument("mode index out of range");
        const std::int64_t stride = ipow(cutoff_, modes_ - 1 - mode);
        const std::int64_t block = stride * cutoff_;
        double t = 0.0;
        for (std::int64_t base = 0; base < dim(); base += block)
            for (std::int64_t i = 0; i < stride; ++i) {
                std::int64_t idx = base + stride * (cutoff_ - 1) + i;
                t += rho_(idx, idx).real();
            }
        double tr = trace();
        return tr > 0 ? t / tr : 0.0;
    }

    double top_level_population() const {
        double t = 0.0;
        for (int m = 0; m < modes_; ++m) t = std::max(t, tail_mass(m));
        return t;
    }

    std::pair<double, double> parity_populations() const {
        double even = 0.0, odd = 0.0;
        for (std::int64_t i = 0; i < dim(); ++i) {
            std::int64_t rest = i;
            int total = 0;
            for (int m = 0; m < modes_; ++m) {
                total += static_cast<int>(rest % cutoff_);
                rest /= cutoff_;
            }
            (total % 2 == 0 ? even : odd) += rho_(i, i).real();
        }
        double tot = even + odd;
        if (tot <= 0.0) return {0.0, 0.0};
        return {even / tot, odd / tot};
    }

private:
    Mat rho_;
    int modes_ = 1;
    int cutoff_ = 1;
};

// Dense operator acting on one mode (cutoff x cutoff) or two modes
// (cutoff^2 x cutoff^2, row-major pair index n_first*cutoff + n_second).
struct ModeOperator {
    Mat matrix;
    int arity = 1;
    int cutoff = 0;

    static ModeOperator one_mode(Mat m, int cutoff) {
        if (m.rows() != cutoff || m.cols() != cutoff)
            throw std::invalid_argument("one-mode operator dimension mismatch");
        return ModeOperator{std::move(m), 1, cutoff};
    }
    static ModeOperator two_mode(Mat m, int cutoff) {
        if (m.rows() != std::int64_t(cutoff) * cutoff || m.cols() != m.rows())
            throw std::invalid_argument("two-mode operator dimension mismatch");
        return ModeOperator{std::move(m), 2, cutoff};
    }
};

// ---------------------------------------------------------------------------
// construction / combination

inline PureState make_fock(int n, int cutoff) {
    if (n < 0) throw std::invalid_argument("make_fock: negative n");
    if (n >= cutoff)
        throw CutoffExceeded("make_fock: n=" + std::to_string(n) +
                             " >= cutoff=" + std::to_string(cutoff));
    Vec v = Vec::Zero(cutoff);
    v[n] = 1.0;
    return PureState(std::move(v), 1, cutoff);
}

inline PureState tensor(const PureState& a, const PureState& b) {
    if (a.cutoff() != b.cutoff()) throw std::invalid_argument("tensor: cutoff mismatch");
    Vec out(a.dim() * b.dim());
    for (Eigen::Index i = 0; i < a.dim(); ++i)
        out.segment(i * b.dim(), b.dim()) = a.amps()[i] * b.amps();
    return PureState(std::move(out), a.modes() + b.modes(), a.cutoff());
}

// ---------------------------------------------------------------------------
// operator application

namespace detail {

// Apply a one-mode matrix to `mode` of a flat multi-mode vector.
inline void apply_one_mode_vec(const Mat& op, Vec& v, int modes, int cutoff, int mode) {
    const std::int64_t inner = ipow(cutoff, modes - 1 - mode);
    const std::int64_t outer = ipow(cutoff, mode);
    const std::int64_t block = inner * cutoff;
    Vec scratch(cutoff);
    for (std::int64_t o = 0; o < outer; ++o) {
        const std::int64_t base = o * block;
        if (inner == 1) {
            scratch.noalias() = op * v.segment(base, cutoff);
            v.segment(base, cutoff) = scratch;
        } else {
            using RowMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
            Eigen::Map<RowMat> slab(v.data() + base, cutoff, inner);
            slab = op * slab;
        }
    }
}

// Apply a two-mode matrix (pair index n_i*cutoff + n_j) to modes (i, j).
inline void apply_two_mode_vec(const Mat& op, Vec& v, int modes, int cutoff, int mi, int mj) {
    const int D = cutoff;
    const std::int64_t si = ipow(D, modes - 1 - mi);
    const std::int64_t sj = ipow(D, modes - 1 - mj);
    const std::int64_t dim = v.size();
    // enumerate assignments of the remaining modes
    std::vector<std::int64_t> rest_strides;
    std::vector<int> rest_modes;
    for (int m = 0; m < modes; ++m)
        if (m != mi && m != mj) {
            rest_modes.push_back(m);
            rest_strides.push_back(ipow(D, modes - 1 - m));
        }
    const std::int64_t rest_count = ipow(D, modes - 2);
    Vec sub(std::int64_t(D) * D), subo(std::int64_t(D) * D);
    for (std::int64_t r = 0; r < rest_count; ++r) {
        std::int64_t base = 0, rr = r;
        for (std::size_t t = rest_modes.size(); t-- > 0;) {
            base += (rr % D) * rest_strides[t];
            rr /= D;
        }
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) sub[std::int64_t(a) * D + b] = v[base + a * si + b * sj];
        subo.noalias() = op * sub;
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) v[base + a * si + b * sj] = subo[std::int64_t(a) * D + b];
        (void)dim;
    }
}

}  // namespace detail

inline PureState apply(const ModeOperator& op, const PureState& s, int mode) {
    if (op.arity != 1) throw std::invalid_argument("apply: operator is not one-mode");
    if (op.cutoff != s.cutoff()) throw std::invalid_argument("apply: cutoff mismatch");
    s.check_mode(mode);
    PureState out = s;
    detail::apply_one_mode_vec(op.matrix, out.amps(), s.modes(), s.cutoff(), mode);
    out.refresh_norm();
    return out;
}

inline PureState apply(const ModeOperator& op, const PureState& s, int mode_a, int mode_b) {
    if (op.arity != 2) throw std::invalid_argument("apply: operator is not two-mode");
    if (op.cutoff != s.cutoff()) throw std::invalid_argument("apply: cutoff mismatch");
    s.check_mode(mode_a);
    s.check_mode(mode_b);
    if (mode_a == mode_b) throw std::invalid_argument("apply: modes must differ");
    PureState out = s;
    detail::apply_two_mode_vec(op.matrix, out.amps(), s.modes(), s.cutoff(), mode_a, mode_b);
    out.refresh_norm();
    return out;
}

inline DensityState apply(const ModeOperator& op, const DensityState& rho, int mode) {
    if (op.arity != 1) throw std::invalid_argument("apply: operator is not one-mode");
    if (op.cutoff != rho.cutoff()) throw std::invalid_argument("apply: cutoff mismatch");
    if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mode index out of range");
    DensityState out = rho;
    Mat& m = out.rho();
    Vec col(m.rows());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        col = m.col(c);
        detail::apply_one_mode_vec(op.matrix, col, rho.modes(), rho.cutoff(), mode);
        m.col(c) = col;
    }
    Mat conj = op.matrix.conjugate();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        col = m.row(r).transpose();
        detail::apply_one_mode_vec(conj, col, rho.modes(), rho.cutoff(), mode);
        m.row(r) = col.transpose();
    }
    return out;
}

inline DensityState apply(const ModeOperator& op, const DensityState& rho, int mode_a, int mode_b) {
    if (op.arity != 2) throw std::invalid_argument("apply: operator is not two-mode");
    if (op.cutoff != rho.cutoff()) throw std::invalid_argument("apply: cutoff mismatch");
    DensityState out = rho;
    Mat& m = out.rho();
    Vec col(m.rows());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        col = m.col(c);
        detail::apply_two_mode_vec(op.matrix, col, rho.modes(), rho.cutoff(), mode_a, mode_b);
        m.col(c) = col;
    }
    Mat conj = op.matrix.conjugate();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        col = m.row(r).transpose();
        detail::apply_two_mode_vec(conj, col, rho.modes(), rho.cutoff(), mode_a, mode_b);
        m.row(r) = col.transpose();
    }
    return out;
}

// ---------------------------------------------------------------------------
// projection / partial trace

// Contract `mode` against the functional with coefficients bra[n] (i.e. the
// output amplitude picks up bra[n] * psi[..., n, ...]; the caller supplies
// already-conjugated coefficients). The result keeps one fewer mode and is
// NOT normalized; the branch weight (squared norm) is returned separately.
inline std::pair<PureState, double> project_mode(const PureState& s, int mode, const Vec& bra) {
    s.check_mode(mode);
    if (bra.size() != s.cutoff()) throw std::invalid_argument("project_mode: bra length != cutoff");
    const int D = s.cutoff();
    const std::int64_t inner = ipow(D, s.modes() - 1 - mode);
    const std::int64_t outer = ipow(D, mode);
    Vec out = Vec::Zero(outer * inner);
    for (std::int64_t o = 0; o < outer; ++o)
        for (int n = 0; n < D; ++n) {
            const cplx c = bra[n];
            if (c == cplx(0, 0)) continue;
            out.segment(o * inner, inner) +=
                c * s.amps().segment((o * D + n) * inner, inner);
        }
    if (s.modes() == 1) {
        // projecting the only mode leaves a scalar; keep it as a 1-level state
        PureState res(out, 0, 1);
        return {res, res.norm2()};
    }
    PureState res(std::move(out), s.modes() - 1, D);
    return {res, res.norm2()};
}

// rho' = (I (x) <m|) rho (I (x) |m>) for PNRD on a density state
inline std::pair<DensityState, double> project_mode_fock(const DensityState& rho, int mode, int m) {
    if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mode index out of range");
    const int D = rho.cutoff();
    if (m < 0 || m >= D) throw std::invalid_argument("project_mode_fock: m out of range");
    const std::int64_t inner = ipow(D, rho.modes() - 1 - mode);
    const std::int64_t outer = ipow(D, mode);
    const std::int64_t odim = outer * inner;
    Mat out(odim, odim);
    auto src_index = [&](std::int64_t flat) {
        const std::int64_t o = flat / inner, i = flat % inner;
        return (o * D + m) * inner + i;
    };
    for (std::int64_t r = 0; r < odim; ++r)
        for (std::int64_t c = 0; c < odim; ++c) out(r, c) = rho.rho()(src_index(r), src_index(c));
    DensityState res(std::move(out), rho.modes() - 1, D);
    return {res, res.trace()};
}

inline DensityState partial_trace(const DensityState& rho, const std::vector<int>& modes_to_keep) {
    const int D = rho.cutoff();
    const int M = rho.modes();
    std::vector<bool> keep(M, false);
    for (int m : modes_to_keep) {
        if (m < 0 || m >= M) throw std::invalid_argument("partial_trace: mode out of range");
        keep[m] = true;
    }
    const int K = static_cast<int>(modes_to_keep.size());
    const std::int64_t kdim = ipow(D, K);
    const std::int64_t tdim = ipow(D, M - K);
    std::vector<std::int64_t> keep_strides, trace_strides;
    for (int m : modes_to_keep) keep_strides.push_back(ipow(D, M - 1 - m));
    for (int m = 0; m < M; ++m)
        if (!keep[m]) trace_strides.push_back(ipow(D, M - 1 - m));
    auto expand = [&](std::int64_t flat, const std::vector<std::int64_t>& strides) {
        std::int64_t idx = 0;
        for (std::size_t t = strides.size(); t-- > 0;) {
            idx += (flat % D) * strides[t];
            flat /= D;
        }
        return idx;
    };
    Mat out = Mat::Zero(kdim, kdim);
    for (std::int64_t t = 0; t < tdim; ++t) {
        const std::int64_t tbase = expand(t, trace_strides);
        for (std::int64_t r = 0; r < kdim; ++r) {
            const std::int64_t rbase = expand(r, keep_strides) + tbase;
            for (std::int64_t c = 0; c < kdim; ++c)
                out(r, c) += rho.rho()(rbase, expand(c, keep_strides) + tbase);
        }
    }
    return DensityState(std::move(out), K, D);
}

// ---------------------------------------------------------------------------
// state files
//
// Text format:  header `modes=<m> cutoff=<d> kind=pure|density`, then one
// line per amplitude / matrix entry: `index re im` with 17 significant
// digits (value-exact round trip for doubles).

inline void save_state(const PureState& s, std::ostream& os) {
    os << "modes=" << s.modes() << " cutoff=" << s.cutoff() << " kind=pure\n";
    char buf[96];
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld %.17g %.17g\n", static_cast<long long>(i),
                      s.amps()[i].real(), s.amps()[i].imag());
        os << buf;
    }
}

inline void save_state(const DensityState& rho, std::ostream& os) {
    os << "modes=" << rho.modes() << " cutoff=" << rho.cutoff() << " kind=density\n";
    char buf[96];
    const auto n = rho.dim();
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof buf, "%lld %.17g %.17g\n",
                          static_cast<long long>(r * n + c), rho.rho()(r, c).real(),
                          rho.rho()(r, c).imag());
            os << buf;
        }
}

inline void save_state_file(const PureState& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    save_state(s, f);
}

inline void save_state_file(const DensityState& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    save_state(s, f);
}

struct LoadedState {
    bool is_pure = true;
    PureState pure;
    DensityState density;
};

inline LoadedState load_state(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("state file: empty");
    int modes = -1, cutoff = -1;
    char kindbuf[16] = {0};
    if (std::sscanf(header.c_str(), "modes=%d cutoff=%d kind=%15s", &modes, &cutoff, kindbuf) != 3)
        throw std::runtime_error("state file: bad header: " + header);
    const std::string kind = kindbuf;
    const std::int64_t dim = ipow(cutoff, modes);
    LoadedState out;
    if (kind == "pure") {
        Vec v = Vec::Zero(dim);
        long long idx;
        double re, im;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            if (std::sscanf(line.c_str(), "%lld %lg %lg", &idx, &re, &im) != 3)
                throw std::runtime_error("state file: bad line: " + line);
            if (idx < 0 || idx >= dim) throw std::runtime_error("state file: index out of range");
            v[idx] = cplx(re, im);
        }
        out.is_pure = true;
        out.pure = PureState(std::move(v), modes, cutoff);
    } else if (kind == "density") {
        Mat m = Mat::Zero(dim, dim);
        long long idx;
        double re, im;
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            if (std::sscanf(line.c_str(), "%lld %lg %lg", &idx, &re, &im) != 3)
                throw std::runtime_error("state file: bad line: " + line);
            if (idx < 0 || idx >= dim * dim)
                throw std::runtime_error("state file: index out of range");
            m(idx / dim, idx % dim) = cplx(re, im);
        }
        out.is_pure = false;
        out.density = DensityState(std::move(m), modes, cutoff);
    } else {
        throw std::runtime_error("state file: unknown kind " + kind);
    }
    return out;
}

inline LoadedState load_state_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return load_state(f);
}

inline cplx inner(const PureState& a, const PureState& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("inner: dimension mismatch");
    return a.amps().dot(b.amps());  // Eigen dot conjugates the left argument
}

}  // namespace catsim
