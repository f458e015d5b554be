#pragma once

// Pure-loss and dephasing channels as Kraus maps on one mode.
//
// Loss (transmissivity eta):   K_k |n> = sqrt(C(n,k) eta^{n-k} (1-eta)^k) |n-k>
// Dephasing (variance eps):    rho_nm -> exp(-eps (n-m)^2 / 2) rho_nm,
//   realized by K_k = eps^{k/2} n̂^k exp(-eps n̂²/2) / sqrt(k!); the Kraus sum
//   telescopes exactly to the Gaussian-rotation average exp(-eps(n-m)^2/2).

#include <cmath>
#include <string>
#include <vector>

#include "catsim/fock.hpp"

namespace catsim {

struct KrausSet {
    std::vector<ModeOperator> operators;
    std::string label;
    int truncation_k = 0;  // number of Kraus terms kept

    // max_{n<=n_max} |(sum K†K − I)_{nn}| on the diagonal (both channels here
    // have diagonal K†K)
    double completeness_defect(int n_max) const {
        if (operators.empty()) return 1.0;
        const int D = operators.front().cutoff;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(D);
        for (const auto& K : operators)
            acc += (K.matrix.adjoint() * K.matrix).diagonal().real();
        double defect = 0.0;
        for (int n = 0; n <= std::min(n_max, D - 1); ++n)
            defect = std::max(defect, std::abs(acc[n] - 1.0));
        return defect;
    }
};

inline KrausSet loss_kraus(double eta_loss, int cutoff) {
    if (eta_loss < 0.0 || eta_loss > 1.0)
        throw std::invalid_argument("loss_kraus: eta outside [0,1]");
    KrausSet set;
    set.label = "loss(" + std::to_string(eta_loss) + ")";
    if (eta_loss == 1.0) {
        set.operators.push_back(ModeOperator::one_mode(Mat::Identity(cutoff, cutoff), cutoff));
        set.truncation_k = 1;
        return set;
    }
    const auto& lf = detail::log_factorials(cutoff);
    for (int k = 0; k < cutoff; ++k) {
        Mat K = Mat::Zero(cutoff, cutoff);
        bool nonzero = false;
        for (int n = k; n < cutoff; ++n) {
            const double lbin = lf[n] - lf[k] - lf[n - k];
            const double lw = 0.5 * (lbin + (n - k) * std::log(eta_loss) +
                                     k * std::log1p(-eta_loss));
            const double v = std::exp(lw);
            if (v > 0.0) nonzero = true;
            K(n - k, n) = v;
        }
        if (!nonzero && k > 0) break;
        set.operators.push_back(ModeOperator::one_mode(std::move(K), cutoff));
    }
    set.truncation_k = static_cast<int>(set.operators.size());
    return set;
}

inline KrausSet dephasing_kraus(double eps_phi, int cutoff, int k_max) {
    if (eps_phi < 0.0) throw std::invalid_argument("dephasing_kraus: eps must be >= 0");
    KrausSet set;
    set.label = "dephasing(" + std::to_string(eps_phi) + ")";
    if (eps_phi == 0.0) {
        set.operators.push_back(ModeOperator::one_mode(Mat::Identity(cutoff, cutoff), cutoff));
        set.truncation_k = 1;
        return set;
    }
    for (int k = 0; k <= k_max; ++k) {
        Mat K = Mat::Zero(cutoff, cutoff);
        for (int n = 0; n < cutoff; ++n) {
            // log coeff: (k/2) log(eps) + k log(n) − (1/2) log(k!) − eps n²/2
            double lv = -0.5 * eps_phi * double(n) * n;
            if (k > 0) {
                if (n == 0) {
                    K(n, n) = 0.0;
                    continue;
                }
                lv += 0.5 * k * std::log(eps_phi) + k * std::log(double(n));
                lv -= 0.5 * detail::log_factorials(k)[k];
            }
            K(n, n) = std::exp(lv);
        }
        set.operators.push_back(ModeOperator::one_mode(std::move(K), cutoff));
    }
    set.truncation_k = static_cast<int>(set.operators.size());
    return set;
}

// rho -> sum_k K_k rho K_k† on `mode`. Kraus matrices here are bands or
// diagonals, so the contraction walks their nonzero entries only.
inline DensityState apply_channel(const DensityState& rho, const KrausSet& kraus, int mode) {
    if (mode < 0 || mode >= rho.modes()) throw std::invalid_argument("mode index out of range");
    const int D = rho.cutoff();
    if (!kraus.operators.empty() && kraus.operators.front().cutoff != D)
        throw std::invalid_argument("apply_channel: cutoff mismatch");
    const std::int64_t inner = ipow(D, rho.modes() - 1 - mode);
    const std::int64_t outer = ipow(D, mode);
    const std::int64_t dim = rho.dim();
    Mat out = Mat::Zero(dim, dim);
    struct Entry {
        int r, c;
        cplx v;
    };
    Mat tmp(dim, dim);
    for (const auto& K : kraus.operators) {
        std::vector<Entry> nz;
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c)
                if (K.matrix(r, c) != cplx(0, 0)) nz.push_back({r, c, K.matrix(r, c)});
        if (nz.empty()) continue;
        // tmp = (K on mode) rho
        tmp.setZero();
        for (const auto& e : nz)
            for (std::int64_t o = 0; o < outer; ++o)
                for (std::int64_t i = 0; i < inner; ++i) {
                    const std::int64_t rr = (o * D + e.r) * inner + i;
                    const std::int64_t rc = (o * D + e.c) * inner + i;
                    tmp.row(rr) += e.v * rho.rho().row(rc);
                }
        // out += tmp (K on mode)†: columns pick up conj(K(r,c)) mapping col c' of
        // K† ... out(:, rr) += conj(v) tmp(:, rc)
        for (const auto& e : nz)
            for (std::int64_t o = 0; o < outer; ++o)
                for (std::int64_t i = 0; i < inner; ++i) {
                    const std::int64_t rr = (o * D + e.r) * inner + i;
                    const std::int64_t rc = (o * D + e.c) * inner + i;
                    out.col(rr) += std::conj(e.v) * tmp.col(rc);
                }
    }
    return DensityState(std::move(out), rho.modes(), rho.cutoff());
}

}  // namespace catsim
