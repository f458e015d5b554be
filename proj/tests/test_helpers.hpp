#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "catsim/fock.hpp"
#include "catsim/rng.hpp"

namespace test_helpers {

inline catsim::PureState random_state(int modes, int cutoff, catsim::Rng& rng) {
    catsim::Vec v(catsim::ipow(cutoff, modes));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = catsim::cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    catsim::PureState s(std::move(v), modes, cutoff);
    s.normalize();
    return s;
}

inline catsim::DensityState random_density(int modes, int cutoff, catsim::Rng& rng, int rank = 3) {
    const auto dim = catsim::ipow(cutoff, modes);
    catsim::Mat rho = catsim::Mat::Zero(dim, dim);
    for (int r = 0; r < rank; ++r) {
        catsim::PureState psi = random_state(modes, cutoff, rng);
        rho += rng.uniform(0.1, 1.0) * psi.amps() * psi.amps().adjoint();
    }
    catsim::DensityState out(std::move(rho), modes, cutoff);
    out.normalize();
    return out;
}

inline double max_abs_diff(const catsim::Vec& a, const catsim::Vec& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace test_helpers
