#pragma once

// End-to-end state-preparation protocols: the non-deterministic homodyne
// baseline, the iterated inline-squeezing scheme (scheme 1), the
// squeezed-ancilla scheme (scheme 2), grid correction, GKP breeding, and the
// closed-form oracles and geometric predictors used to validate them.

#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "catsim/analysis.hpp"
#include "catsim/channels.hpp"
#include "catsim/measurements.hpp"
#include "catsim/rng.hpp"
#include "catsim/states.hpp"

namespace catsim {

enum class Scheme { homodyne, scheme1, scheme2 };
enum class AnglePolicy { uniform, pair, random };
enum class EtaSchedule { constant, equal_light };

struct InputSpec {
    enum class Kind { fock, squeezed_fock, custom } kind = Kind::fock;
    int n = 0;
    double r_in = 0.0;  // squeezing of a squeezed_fock input
    std::optional<PureState> custom;
};

// Noise insertion points of the iterated circuit:
//   a: transmitted (kept) arm, each round after the beamsplitter
//   b: tapped arm, before the inline squeezer
//   c: tapped arm, before the detector
struct NoiseConfig {
    double loss_eta_a = 1.0, loss_eta_b = 1.0, loss_eta_c = 1.0;
    double deph_eps_a = 0.0, deph_eps_b = 0.0, deph_eps_c = 0.0;
    int dephasing_kmax = 96;

    bool any() const {
        return loss_eta_a < 1.0 || loss_eta_b < 1.0 || loss_eta_c < 1.0 || deph_eps_a > 0.0 ||
               deph_eps_b > 0.0 || deph_eps_c > 0.0;
    }
};

struct ProtocolConfig {
    Scheme scheme = Scheme::scheme1;
    InputSpec input;
    int k = 1;
    double eta_total = 0.5;
    EtaSchedule schedule = EtaSchedule::constant;
    double inline_r = 0.0;   // scheme 1 squeezing before each PNRD
    double ancilla_r = 0.0;  // scheme 2 squeezed-vacuum input
    std::optional<AnglePolicy> angle_policy;  // default: pair for k=2 scheme1, uniform else;
                                              // random for scheme2
    int cutoff = 0;
    std::uint64_t seed = 0;
    std::optional<NoiseConfig> noise;
    double tail_flag_threshold = 1e-6;
    double tail_abort_threshold = 1e-3;

    AnglePolicy effective_angle_policy() const {
        if (angle_policy) return *angle_policy;
        if (scheme == Scheme::scheme2) return AnglePolicy::random;
        if (k == 2) return AnglePolicy::pair;
        return AnglePolicy::uniform;
    }
};

struct RunRecord {
    Scheme scheme = Scheme::scheme1;
    std::vector<int> outcomes;          // m_j (PNRD schemes)
    double homodyne_x = 0.0;            // homodyne scheme outcome
    double branch_probability = 0.0;    // product of branch weights (density for homodyne)
    PureState output;                   // pure pipeline result
    std::optional<DensityState> output_density;  // set instead when noise is active
    int expected_parity = -1;           // 0 even, 1 odd, -1 n/a
    double cross_parity_population = 0.0;
    double tail_mass = 0.0;
    bool tail_flagged = false;
    std::vector<double> angles;
    std::vector<double> etas;
    std::uint64_t seed = 0;
    std::optional<CatFit> fit;

    bool noisy() const { return output_density.has_value(); }
};

// ---------------------------------------------------------------------------
// schedules and closed-form scalar laws

// Transmissivities eta_j such that the reflected power R_j = (1-eta_j)
// prod_{i<j} eta_i is the same for every detector and prod eta_j = eta_total.
inline std::vector<double> eta_schedule_equal_light(int k, double eta_total) {
    if (k < 1) throw std::invalid_argument("eta_schedule_equal_light: k must be >= 1");
    if (!(eta_total > 0.0 && eta_total < 1.0))
        throw std::invalid_argument("eta_schedule_equal_light: eta_total must be in (0,1)");
    const double c = (1.0 - eta_total) / k;
    std::vector<double> etas(k);
    for (int j = 1; j <= k; ++j) etas[j - 1] = (1.0 - j * c) / (1.0 - (j - 1) * c);
    return etas;
}

// expected component squeezing of the grid-corrected cat
inline double expected_delta(int n, double eta_total) {
    return std::sqrt(std::numbers::pi * (1.0 - eta_total) / (2.0 * n * eta_total));
}

// amplitude of the cat after undoing its intrinsic squeezing
inline double unsqueezed_cat_amplitude(int n, double eta_total) {
    return std::sqrt(n * eta_total / (1.0 - eta_total));
}

// ---------------------------------------------------------------------------
// closed-form single-round oracles (independent of the matrix pipeline;
// evaluated with log-factorials and the analytic squeeze matrix element)

namespace detail {

inline double log_binomial_sqrt(int j, int s) {
    const auto& lf = log_factorials(j);
    return 0.5 * (lf[j] - lf[s] - lf[j - s]);
}

}  // namespace detail

// Output of: input sum_j c_j |j> mixed with vacuum on B(eta) (kept arm
// transmits sqrt(eta)), inline squeeze S(r, theta=0) on the tapped arm,
// PNRD outcome m. Unnormalized, matching the matrix pipeline amplitudes.
inline PureState scheme1_closed_form(const Vec& coeffs, double eta, double r, int m, int cutoff) {
    Vec out = Vec::Zero(cutoff);
    const int jmax = static_cast<int>(coeffs.size()) - 1;
    for (int j = 0; j <= jmax; ++j) {
        if (coeffs[j] == cplx(0, 0)) continue;
        for (int s = 0; s <= j; ++s) {
            const int t = j - s;
            if (t >= cutoff) continue;
            if (((m - s) % 2) != 0) continue;
            const double me = squeeze_element(m, s, r);
            if (me == 0.0) continue;
            const double bs = std::exp(detail::log_binomial_sqrt(j, s) +
                                       0.5 * t * std::log(eta) +
                                       0.5 * s * std::log1p(-eta)) *
                              ((s % 2) ? -1.0 : 1.0);
            out[t] += coeffs[j] * bs * me;
        }
    }
    return PureState(std::move(out), 1, cutoff);
}

// Same beamsplitter step followed by a q-quadrature projection at x.
inline PureState homodyne_closed_form(const Vec& coeffs, double eta, double x, int cutoff) {
    Vec out = Vec::Zero(cutoff);
    const Eigen::VectorXd h = quadrature_bra(x, std::max<int>(cutoff, coeffs.size()));
    const int jmax = static_cast<int>(coeffs.size()) - 1;
    for (int j = 0; j <= jmax; ++j) {
        if (coeffs[j] == cplx(0, 0)) continue;
        for (int s = 0; s <= j; ++s) {
            const int t = j - s;
            if (t >= cutoff) continue;
            const double bs = std::exp(detail::log_binomial_sqrt(j, s) +
                                       0.5 * t * std::log(eta) +
                                       0.5 * s * std::log1p(-eta)) *
                              ((s % 2) ? -1.0 : 1.0);
            out[t] += coeffs[j] * bs * h[s];
        }
    }
    return PureState(std::move(out), 1, cutoff);
}

// ---------------------------------------------------------------------------
// component geometry for the first round of scheme 1
//
// In the large-inline-squeezing limit the output components sit at the
// intersection of the circle |alpha|^2 = n eta with the measurement ellipse
// e^{-2r} Re(alpha)^2 + e^{2r} Im(alpha)^2 = b, b = m eta / (1 - eta).
// When the curves do not intersect the components sit on the circle nearest
// the ellipse (on the q axis when the ellipse is inside, on the p axis when
// it is outside).
inline std::vector<cplx> predict_components(int n, double eta, double r, int m) {
    const double c2 = n * eta;
    const double b = m * eta / (1.0 - eta);
    const double lo = c2 * std::exp(-2.0 * r), hi = c2 * std::exp(2.0 * r);
    const double c = std::sqrt(c2);
    if (r <= 0.0 || b <= lo) return {cplx(c, 0), cplx(-c, 0)};
    if (b >= hi) return {cplx(0, c), cplx(0, -c)};
    const double re2 = (c2 * std::exp(2.0 * r) - b) / (2.0 * std::sinh(2.0 * r));
    const double re = std::sqrt(std::min(re2, c2));
    const double im = std::sqrt(std::max(c2 - re2, 0.0));
    if (im < 1e-9) return {cplx(re, 0), cplx(-re, 0)};
    if (re < 1e-9) return {cplx(0, im), cplx(0, -im)};
    return {cplx(re, im), cplx(re, -im), cplx(-re, im), cplx(-re, -im)};
}

// ---------------------------------------------------------------------------
// shared pure/density pipeline state

namespace detail {

struct Pipeline {
    std::variant<PureState, DensityState> state;
    int cutoff;

    explicit Pipeline(PureState s) : state(std::move(s)), cutoff(0) {
        cutoff = std::get<PureState>(state).cutoff();
    }

    bool pure() const { return std::holds_alternative<PureState>(state); }
    PureState& as_pure() { return std::get<PureState>(state); }
    DensityState& as_density() { return std::get<DensityState>(state); }

    void to_density() {
        if (pure()) state = DensityState::from_pure(as_pure());
    }

    void tensor_vacuum_or(const PureState& ancilla) {
        if (pure())
            state = tensor(as_pure(), ancilla);
        else {
            DensityState anc = DensityState::from_pure(ancilla);
            const auto& r0 = as_density().rho();
            const auto& r1 = anc.rho();
            const auto d0 = r0.rows(), d1 = r1.rows();
            Mat out(d0 * d1, d0 * d1);
            for (Eigen::Index a = 0; a < d0; ++a)
                for (Eigen::Index b = 0; b < d0; ++b)
                    out.block(a * d1, b * d1, d1, d1) = r0(a, b) * r1;
            state = DensityState(std::move(out), as_density().modes() + 1, cutoff);
        }
    }

    void beamsplitter(double eta) {
        if (pure())
            apply_beamsplitter(as_pure(), 0, 1, eta);
        else
            apply_beamsplitter(as_density(), 0, 1, eta);
    }

    void one_mode(const ModeOperator& op, int mode) {
        if (pure())
            state = apply(op, as_pure(), mode);
        else
            state = apply(op, as_density(), mode);
    }

    void channel(const KrausSet& kraus, int mode) {
        to_density();
        state = apply_channel(as_density(), kraus, mode);
    }

    // sample + project PNRD on `mode`; returns (m, branch weight ratio)
    std::pair<int, double> pnrd(int mode, Rng& rng) {
        if (pure()) {
            const double before = as_pure().norm2();
            MeasurementOutcome o = pnrd_sample(as_pure(), mode, rng);
            const int m = o.m;
            const double ratio = before > 0 ? o.probability / before : 0.0;
            state = std::move(o.post_state);
            return {m, ratio};
        }
        const double before = as_density().trace();
        auto [post, m] = pnrd_sample(as_density(), mode, rng);
        const double ratio = before > 0 ? post.trace() / before : 0.0;
        state = std::move(post);
        return {m, ratio};
    }

    double tail() const {
        return pure() ? std::get<PureState>(state).top_level_population()
                      : std::get<DensityState>(state).top_level_population();
    }
};

inline PureState build_input(const InputSpec& in, int cutoff) {
    switch (in.kind) {
        case InputSpec::Kind::fock:
            return make_fock(in.n, cutoff);
        case InputSpec::Kind::squeezed_fock:
            return squeezed_fock(in.n, in.r_in, cutoff);
        case InputSpec::Kind::custom: {
            if (!in.custom) throw std::invalid_argument("input: custom state missing");
            PureState s = *in.custom;
            if (s.modes() != 1) throw std::invalid_argument("input: custom state must be 1-mode");
            if (s.cutoff() != cutoff)
                throw std::invalid_argument("input: custom state cutoff mismatch");
            return s.normalized();
        }
    }
    throw std::logic_error("unreachable");
}

inline int input_parity(const InputSpec& in, const PureState& built) {
    if (in.kind != InputSpec::Kind::custom) return in.n % 2;
    auto [even_pop, odd_pop] = built.parity_populations();
    const double minority = std::min(even_pop, odd_pop);
    if (minority > 1e-10)
        throw std::invalid_argument(
            "input: custom state must have definite photon-number parity");
    return even_pop >= odd_pop ? 0 : 1;
}

inline std::vector<double> make_angles(const ProtocolConfig& cfg, Rng& rng) {
    std::vector<double> th(cfg.k);
    switch (cfg.effective_angle_policy()) {
        case AnglePolicy::uniform:
            for (int j = 1; j <= cfg.k; ++j) th[j - 1] = j * std::numbers::pi / cfg.k;
            break;
        case AnglePolicy::pair:
            if (cfg.k != 2)
                throw std::invalid_argument("angle policy 'pair' requires k = 2");
            for (int j = 1; j <= cfg.k; ++j) th[j - 1] = j * std::numbers::pi / 4.0;
            break;
        case AnglePolicy::random:
            for (int j = 0; j < cfg.k; ++j) th[j] = rng.uniform() * std::numbers::pi;
            break;
    }
    return th;
}

inline std::vector<double> make_etas(const ProtocolConfig& cfg) {
    if (cfg.schedule == EtaSchedule::equal_light)
        return eta_schedule_equal_light(cfg.k, cfg.eta_total);
    std::vector<double> etas(cfg.k, std::pow(cfg.eta_total, 1.0 / cfg.k));
    return etas;
}

inline void finish_record(RunRecord& rec, Pipeline& pipe, const ProtocolConfig& cfg,
                          int parity_in) {
    int msum = 0;
    for (int m : rec.outcomes) msum += m;
    rec.expected_parity = (parity_in + msum) % 2;
    if (pipe.pure()) {
        rec.output = std::move(pipe.as_pure());
        auto [even_pop, odd_pop] = rec.output.parity_populations();
        rec.cross_parity_population =
            rec.expected_parity == 0 ? odd_pop : even_pop;
    } else {
        rec.output_density = std::move(pipe.as_density());
        auto [even_pop, odd_pop] = rec.output_density->parity_populations();
        rec.cross_parity_population = rec.expected_parity == 0 ? odd_pop : even_pop;
    }
    rec.tail_flagged = rec.tail_mass > cfg.tail_flag_threshold;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// protocol runners

// Baseline non-deterministic scheme: mix the input with vacuum at eta_total
// and project the q quadrature of the tapped mode at x (sampled from the
// discretized outcome distribution when x is not given).
inline RunRecord run_homodyne(const ProtocolConfig& cfg, std::optional<double> x_outcome) {
    if (cfg.scheme != Scheme::homodyne) throw std::invalid_argument("run_homodyne: wrong scheme");
    if (cfg.k != 1) throw std::invalid_argument("run_homodyne: k must be 1");
    Rng rng(cfg.seed);
    PureState input = detail::build_input(cfg.input, cfg.cutoff);
    PureState joint = tensor(input, make_fock(0, cfg.cutoff));
    apply_beamsplitter(joint, 0, 1, cfg.eta_total);
    double x;
    if (x_outcome) {
        x = *x_outcome;
    } else {
        // sample from the density on the default grid [-6, 6], step 0.01
        const double step = 0.01, lim = 6.0;
        std::vector<double> xs, ws;
        for (double xx = -lim; xx <= lim + 1e-12; xx += step) {
            xs.push_back(xx);
            ws.push_back(homodyne_project(joint, 1, xx, 0.0).second);
        }
        double total = 0.0;
        for (double w : ws) total += w;
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = xs.size() - 1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            acc += ws[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        x = xs[pick];
    }
    auto [post, density] = homodyne_project(joint, 1, x, 0.0);
    RunRecord rec;
    rec.scheme = Scheme::homodyne;
    rec.homodyne_x = x;
    rec.branch_probability = density;
    rec.output = std::move(post);
    rec.tail_mass = rec.output.norm2() > 0 ? rec.output.top_level_population() : 0.0;
    rec.tail_flagged = rec.tail_mass > cfg.tail_flag_threshold;
    rec.etas = {cfg.eta_total};
    rec.seed = cfg.seed;
    return rec;
}

// Scheme 1: k rounds of (tap on B(eta_j)) -> inline squeeze S(r, theta_j) on
// the tapped arm -> PNRD. Output parity is (n + sum_j m_j) mod 2.
inline RunRecord run_scheme1(const ProtocolConfig& cfg) {
    if (cfg.scheme != Scheme::scheme1) throw std::invalid_argument("run_scheme1: wrong scheme");
    if (cfg.k < 1) throw std::invalid_argument("run_scheme1: k must be >= 1");
    Rng rng(cfg.seed);
    PureState input = detail::build_input(cfg.input, cfg.cutoff);
    const int parity_in = detail::input_parity(cfg.input, input);
    RunRecord rec;
    rec.scheme = Scheme::scheme1;
    rec.seed = cfg.seed;
    rec.etas = detail::make_etas(cfg);
    rec.angles = detail::make_angles(cfg, rng);
    detail::Pipeline pipe(std::move(input));
    const PureState vac = make_fock(0, cfg.cutoff);
    double prob = 1.0;
    const NoiseConfig noise = cfg.noise.value_or(NoiseConfig{});
    const bool noisy = cfg.noise && cfg.noise->any();
    for (int j = 0; j < cfg.k; ++j) {
        pipe.tensor_vacuum_or(vac);
        pipe.beamsplitter(rec.etas[j]);
        if (noisy) {
            if (noise.loss_eta_a < 1.0)
                pipe.channel(loss_kraus(noise.loss_eta_a, cfg.cutoff), 0);
            if (noise.deph_eps_a > 0.0)
                pipe.channel(dephasing_kraus(noise.deph_eps_a, cfg.cutoff, noise.dephasing_kmax),
                             0);
            if (noise.loss_eta_b < 1.0)
                pipe.channel(loss_kraus(noise.loss_eta_b, cfg.cutoff), 1);
            if (noise.deph_eps_b > 0.0)
                pipe.channel(dephasing_kraus(noise.deph_eps_b, cfg.cutoff, noise.dephasing_kmax),
                             1);
        }
        pipe.one_mode(*squeeze(cfg.inline_r, rec.angles[j], cfg.cutoff), 1);
        if (noisy) {
            if (noise.loss_eta_c < 1.0)
                pipe.channel(loss_kraus(noise.loss_eta_c, cfg.cutoff), 1);
            if (noise.deph_eps_c > 0.0)
                pipe.channel(dephasing_kraus(noise.deph_eps_c, cfg.cutoff, noise.dephasing_kmax),
                             1);
        }
        rec.tail_mass = std::max(rec.tail_mass, pipe.tail());
        if (rec.tail_mass > cfg.tail_abort_threshold)
            throw CutoffExceeded("run_scheme1: tail mass " + std::to_string(rec.tail_mass) +
                                 " exceeded hard guard at round " + std::to_string(j + 1));
        auto [m, ratio] = pipe.pnrd(1, rng);
        rec.outcomes.push_back(m);
        prob *= ratio;
    }
    rec.branch_probability = prob;
    detail::finish_record(rec, pipe, cfg, parity_in);
    return rec;
}

// Scheme 2: k rounds of (squeezed-vacuum ancilla S(r, theta_j)|0>) -> B(eta)
// -> PNRD on the ancilla arm. No inline squeezing on the kept mode. Output
// parity is (mu + sum_j m_j) mod 2 with mu the input parity.
inline RunRecord run_scheme2(const ProtocolConfig& cfg) {
    if (cfg.scheme != Scheme::scheme2) throw std::invalid_argument("run_scheme2: wrong scheme");
    if (cfg.k < 1) throw std::invalid_argument("run_scheme2: k must be >= 1");
    Rng rng(cfg.seed);
    PureState input = detail::build_input(cfg.input, cfg.cutoff);
    const int parity_in = detail::input_parity(cfg.input, input);
    RunRecord rec;
    rec.scheme = Scheme::scheme2;
    rec.seed = cfg.seed;
    rec.etas = detail::make_etas(cfg);
    rec.angles = detail::make_angles(cfg, rng);
    detail::Pipeline pipe(std::move(input));
    double prob = 1.0;
    const NoiseConfig noise = cfg.noise.value_or(NoiseConfig{});
    const bool noisy = cfg.noise && cfg.noise->any();
    for (int j = 0; j < cfg.k; ++j) {
        Vec anc = squeeze_matrix(cfg.ancilla_r, rec.angles[j], cfg.cutoff).col(0);
        pipe.tensor_vacuum_or(PureState(std::move(anc), 1, cfg.cutoff));
        pipe.beamsplitter(rec.etas[j]);
        if (noisy) {
            if (noise.loss_eta_a < 1.0)
                pipe.channel(loss_kraus(noise.loss_eta_a, cfg.cutoff), 0);
            if (noise.deph_eps_a > 0.0)
                pipe.channel(dephasing_kraus(noise.deph_eps_a, cfg.cutoff, noise.dephasing_kmax),
                             0);
            if (noise.loss_eta_c < 1.0)
                pipe.channel(loss_kraus(noise.loss_eta_c, cfg.cutoff), 1);
            if (noise.deph_eps_c > 0.0)
                pipe.channel(dephasing_kraus(noise.deph_eps_c, cfg.cutoff, noise.dephasing_kmax),
                             1);
        }
        rec.tail_mass = std::max(rec.tail_mass, pipe.tail());
        if (rec.tail_mass > cfg.tail_abort_threshold)
            throw CutoffExceeded("run_scheme2: tail mass " + std::to_string(rec.tail_mass) +
                                 " exceeded hard guard at round " + std::to_string(j + 1));
        auto [m, ratio] = pipe.pnrd(1, rng);
        rec.outcomes.push_back(m);
        prob *= ratio;
    }
    rec.branch_probability = prob;
    detail::finish_record(rec, pipe, cfg, parity_in);
    return rec;
}

inline RunRecord run_protocol(const ProtocolConfig& cfg,
                              std::optional<double> homodyne_x = std::nullopt) {
    switch (cfg.scheme) {
        case Scheme::homodyne:
            return run_homodyne(cfg, homodyne_x);
        case Scheme::scheme1:
            return run_scheme1(cfg);
        case Scheme::scheme2:
            return run_scheme2(cfg);
    }
    throw std::logic_error("unreachable");
}

// Exhaustive branch enumeration of scheme 1 (pure pipeline, fixed angles).
// Branches are returned with exact probabilities; intended for small n and k.
inline std::vector<RunRecord> enumerate_scheme1(const ProtocolConfig& cfg, int m_max) {
    if (cfg.scheme != Scheme::scheme1) throw std::invalid_argument("enumerate: wrong scheme");
    if (cfg.noise && cfg.noise->any())
        throw std::invalid_argument("enumerate: noiseless pipeline only");
    Rng rng(cfg.seed);
    PureState input = detail::build_input(cfg.input, cfg.cutoff);
    const int parity_in = detail::input_parity(cfg.input, input);
    const auto etas = detail::make_etas(cfg);
    const auto angles = detail::make_angles(cfg, rng);
    const PureState vac = make_fock(0, cfg.cutoff);
    std::vector<RunRecord> out;
    struct Frame {
        PureState state;
        std::vector<int> ms;
    };
    std::vector<Frame> stack{{std::move(input), {}}};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        const int j = static_cast<int>(f.ms.size());
        if (j == cfg.k) {
            RunRecord rec;
            rec.scheme = Scheme::scheme1;
            rec.outcomes = f.ms;
            rec.branch_probability = f.state.norm2();
            rec.etas = etas;
            rec.angles = angles;
            rec.seed = cfg.seed;
            rec.tail_mass = rec.branch_probability > 0 ? f.state.top_level_population() : 0.0;
            detail::Pipeline pipe(std::move(f.state));
            detail::finish_record(rec, pipe, cfg, parity_in);
            out.push_back(std::move(rec));
            continue;
        }
        PureState joint = tensor(f.state, vac);
        apply_beamsplitter(joint, 0, 1, etas[j]);
        joint = apply(*squeeze(cfg.inline_r, angles[j], cfg.cutoff), joint, 1);
        for (int m = 0; m <= m_max; ++m) {
            Vec bra = Vec::Zero(cfg.cutoff);
            bra[m] = 1.0;
            auto [post, w] = project_mode(joint, 1, bra);
            std::vector<int> ms = f.ms;
            ms.push_back(m);
            stack.push_back({std::move(post), std::move(ms)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// grid correction

// Rotate the principal cat axis onto q and apply the extra squeezing
// z = 0.5 ln(2 n eta_eff / pi) that moves the components to ±sqrt(pi/2).
// Odd-parity states additionally receive the small p displacement that
// restores a positive Wigner maximum at the origin.
inline PureState correct_to_grid(const PureState& state, int n, double eta_total_effective) {
    const int D = state.cutoff();
    PureState s = state.normalized();
    const double axis = detail::principal_axis(phase_distribution(s, 4096));
    s = apply(*rotation(-axis, D), s, 0);
    const double z = 0.5 * std::log(2.0 * n * eta_total_effective / std::numbers::pi);
    if (std::abs(z) > 1e-15) s = apply(*squeeze(z, 0.0, D), s, 0);
    auto [even_pop, odd_pop] = s.parity_populations();
    if (odd_pop > even_pop) {
        const double dp = std::numbers::pi / (4.0 * std::sqrt(std::numbers::pi / 2.0));
        s = apply(*displacement(cplx(0.0, dp), D), s, 0);
    }
    return s;
}

// ---------------------------------------------------------------------------
// GKP breeding

enum class BreedGate { sum_gate, beamsplitter };

struct BreedRecord {
    PureState output;        // unnormalized surviving mode
    double weight = 0.0;     // density of the homodyne branch
    double x = 0.0;          // homodyne outcome used
    BreedGate gate = BreedGate::sum_gate;
};

// Entangle two (grid-corrected) states and measure p on the second mode.
// With the SUM gate the second input acts as the control whose position is
// added onto the first; the surviving mode carries the bred state.
inline BreedRecord breed(const PureState& a, const PureState& b, BreedGate gate,
                         std::optional<double> postselect_x, Rng* rng = nullptr) {
    if (a.cutoff() != b.cutoff()) throw std::invalid_argument("breed: cutoff mismatch");
    PureState joint = tensor(a.normalized(), b.normalized());
    if (gate == BreedGate::sum_gate)
        apply_sum_gate(joint, /*mode_ctrl=*/1, /*mode_tgt=*/0);
    else
        apply_beamsplitter(joint, 0, 1, 0.5);
    double x = 0.0;
    if (postselect_x) {
        x = *postselect_x;
    } else {
        if (!rng) throw std::invalid_argument("breed: sampling requires an rng");
        const double step = 0.01, lim = 6.0;
        std::vector<double> xs, ws;
        for (double xx = -lim; xx <= lim + 1e-12; xx += step) {
            xs.push_back(xx);
            ws.push_back(homodyne_project(joint, 1, xx, std::numbers::pi / 2.0).second);
        }
        double total = 0.0;
        for (double w : ws) total += w;
        const double u = rng->uniform() * total;
        double acc = 0.0;
        std::size_t pick = xs.size() - 1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            acc += ws[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        x = xs[pick];
    }
    auto [post, density] = homodyne_project(joint, 1, x, std::numbers::pi / 2.0);
    BreedRecord rec;
    rec.output = std::move(post);
    rec.weight = density;
    rec.x = x;
    rec.gate = gate;
    return rec;
}

// ---------------------------------------------------------------------------
// scheme 2 phase-distribution approximation
//
// P_out ∝ prod_j P_j with P_j = 1 for even outcomes and
// P_j = 1 − cos(2 phi − phi_j / 2) for odd outcomes.

inline PhaseDistribution phase_dist_approx_scheme2(const std::vector<int>& outcome_parities,
                                                   const std::vector<double>& phi_js,
                                                   int resolution = 512) {
    if (outcome_parities.size() != phi_js.size())
        throw std::invalid_argument("phase_dist_approx: size mismatch");
    PhaseDistribution out;
    out.phi_axis.resize(resolution);
    out.values.assign(resolution, 1.0);
    for (int i = 0; i < resolution; ++i)
        out.phi_axis[i] = 2.0 * std::numbers::pi * i / resolution;
    for (std::size_t j = 0; j < outcome_parities.size(); ++j) {
        if (outcome_parities[j] % 2 == 0) continue;
        for (int i = 0; i < resolution; ++i)
            out.values[i] *= 1.0 - std::cos(2.0 * out.phi_axis[i] - phi_js[j] / 2.0);
    }
    double total = 0.0;
    for (double v : out.values) total += v;
    const double dphi = 2.0 * std::numbers::pi / resolution;
    if (total > 0)
        for (double& v : out.values) v /= total * dphi;
    return out;
}

// Best phase offset c for the fringe 1 − cos(2 phi − c) against a measured
// per-round distribution ratio, reported alongside the verbatim phi_j/2
// scaling (least-squares on the grid).
inline double fit_fringe_offset(const PhaseDistribution& ratio) {
    // 1 − cos(2phi − c) = 1 − cos(2phi)cos(c) − sin(2phi)sin(c); LSQ in
    // (cos c, sin c) against values − mean
    double sc = 0.0, ss = 0.0;
    const int n = static_cast<int>(ratio.values.size());
    double mean = 0.0;
    for (double v : ratio.values) mean += v;
    mean /= n;
    for (int i = 0; i < n; ++i) {
        const double d = ratio.values[i] - mean;
        sc += -d * std::cos(2.0 * ratio.phi_axis[i]);
        ss += -d * std::sin(2.0 * ratio.phi_axis[i]);
    }
    return std::atan2(ss, sc);
}

}  // namespace catsim
