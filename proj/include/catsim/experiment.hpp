#pragma once

// Batch experiment driver: structured-text experiment files, seeded
// single-run and ensemble execution with a worker pool, summary statistics,
// breeding trees, and run-record serialization.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "catsim/protocols.hpp"

namespace catsim {

// ---------------------------------------------------------------------------
// experiment file: flat `key = value` pairs with dotted keys, '#' comments

struct ExperimentFile {
    int schema_version = 1;
    ProtocolConfig protocol;
    // input extras for generated families
    int random_even_nmax = 10;
    double random_even_base = 1.2;
    std::string input_state_path;
    std::string input_kind = "fock";

    int runs = 1;
    std::uint64_t master_seed = 0;
    std::vector<double> eta_sweep;  // empty: single eta_total

    bool out_wigner = false;
    double wigner_range = 6.0, wigner_step = 0.05;
    bool out_phase = false;
    int phase_resolution = 512;
    bool out_fit = true;
    bool grid_correct = true;
    bool save_states = false;

    int breed_depth = 0;
    std::string breed_pairing = "random";     // random | ordered
    std::string breed_homodyne = "postselect0";  // postselect0 | sample
    BreedGate breed_gate = BreedGate::sum_gate;

    std::optional<double> homodyne_x;

    std::map<std::string, std::string> raw;  // echo of the parsed keys
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw SchemaError(key, "experiment file: key '" + key + "' expects a number, got '" + v +
                                   "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return i;
    } catch (...) {
        throw SchemaError(key,
                          "experiment file: key '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw SchemaError(key, "experiment file: key '" + key + "' expects true/false, got '" + v +
                               "'");
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw SchemaError(key, "experiment file: key '" + key + "' expects a list");
    return out;
}

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "schema_version",
        "protocol.scheme",
        "protocol.cutoff",
        "protocol.input.kind",
        "protocol.input.n",
        "protocol.input.r_db",
        "protocol.input.path",
        "protocol.input.n_max",
        "protocol.input.weight_base",
        "protocol.k",
        "protocol.eta_total",
        "protocol.eta_schedule",
        "protocol.inline_r_db",
        "protocol.ancilla_r_db",
        "protocol.angle_policy",
        "protocol.homodyne_x",
        "protocol.seed",
        "ensemble.runs",
        "ensemble.master_seed",
        "sweep.eta_total",
        "outputs.wigner",
        "outputs.wigner_range",
        "outputs.wigner_step",
        "outputs.phase",
        "outputs.phase_resolution",
        "outputs.fit",
        "outputs.grid_correct",
        "outputs.save_states",
        "breeding.depth",
        "breeding.pairing",
        "breeding.homodyne",
        "breeding.gate",
        "noise.loss_eta_a",
        "noise.loss_eta_b",
        "noise.loss_eta_c",
        "noise.dephasing_eps_a",
        "noise.dephasing_eps_b",
        "noise.dephasing_eps_c",
    };
    return keys;
}

}  // namespace detail

// Parse and validate key = value text. Unknown keys are rejected; missing
// required keys raise SchemaError naming the key.
inline ExperimentFile parse_experiment(std::istream& is,
                                       const std::map<std::string, std::string>& overrides = {}) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("", "experiment file: line " + std::to_string(lineno) +
                                      " is not 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        kv[key] = val;
    }
    for (const auto& [k, v] : overrides) kv[k] = v;
    for (const auto& [k, v] : kv)
        if (!detail::known_keys().count(k))
            throw SchemaError(k, "experiment file: unknown key '" + k + "'");

    ExperimentFile ef;
    ef.raw = kv;
    auto has = [&](const std::string& k) { return kv.count(k) > 0; };
    auto get = [&](const std::string& k) { return kv.at(k); };

    if (has("schema_version")) ef.schema_version = detail::parse_int("schema_version", get("schema_version"));
    if (ef.schema_version != 1) throw SchemaError("schema_version", "unsupported schema_version");

    if (!has("protocol.scheme"))
        throw SchemaError("protocol.scheme", "experiment file: missing required key 'protocol.scheme'");
    const std::string scheme = get("protocol.scheme");
    if (scheme == "homodyne")
        ef.protocol.scheme = Scheme::homodyne;
    else if (scheme == "scheme1")
        ef.protocol.scheme = Scheme::scheme1;
    else if (scheme == "scheme2")
        ef.protocol.scheme = Scheme::scheme2;
    else
        throw SchemaError("protocol.scheme", "protocol.scheme must be homodyne|scheme1|scheme2");

    if (!has("protocol.cutoff"))
        throw SchemaError("protocol.cutoff", "experiment file: missing required key 'protocol.cutoff'");
    ef.protocol.cutoff = detail::parse_int("protocol.cutoff", get("protocol.cutoff"));
    if (ef.protocol.cutoff < 2) throw SchemaError("protocol.cutoff", "protocol.cutoff must be >= 2");

    ef.input_kind = has("protocol.input.kind") ? get("protocol.input.kind") : "fock";
    if (ef.input_kind == "fock") {
        ef.protocol.input.kind = InputSpec::Kind::fock;
        if (!has("protocol.input.n"))
            throw SchemaError("protocol.input.n", "missing required key 'protocol.input.n'");
        ef.protocol.input.n = detail::parse_int("protocol.input.n", get("protocol.input.n"));
    } else if (ef.input_kind == "squeezed_fock") {
        ef.protocol.input.kind = InputSpec::Kind::squeezed_fock;
        if (!has("protocol.input.n"))
            throw SchemaError("protocol.input.n", "missing required key 'protocol.input.n'");
        ef.protocol.input.n = detail::parse_int("protocol.input.n", get("protocol.input.n"));
        if (has("protocol.input.r_db"))
            ef.protocol.input.r_in =
                db_to_r(detail::parse_double("protocol.input.r_db", get("protocol.input.r_db")));
    } else if (ef.input_kind == "state_file") {
        ef.protocol.input.kind = InputSpec::Kind::custom;
        if (!has("protocol.input.path"))
            throw SchemaError("protocol.input.path", "missing required key 'protocol.input.path'");
        ef.input_state_path = get("protocol.input.path");
    } else if (ef.input_kind == "random_even") {
        ef.protocol.input.kind = InputSpec::Kind::custom;  // generated per run
        if (has("protocol.input.n_max"))
            ef.random_even_nmax = detail::parse_int("protocol.input.n_max", get("protocol.input.n_max"));
        if (has("protocol.input.weight_base"))
            ef.random_even_base =
                detail::parse_double("protocol.input.weight_base", get("protocol.input.weight_base"));
    } else {
        throw SchemaError("protocol.input.kind",
                          "protocol.input.kind must be fock|squeezed_fock|state_file|random_even");
    }

    if (has("protocol.k")) ef.protocol.k = detail::parse_int("protocol.k", get("protocol.k"));
    if (ef.protocol.k < 1) throw SchemaError("protocol.k", "protocol.k must be >= 1");
    if (has("protocol.eta_total"))
        ef.protocol.eta_total = detail::parse_double("protocol.eta_total", get("protocol.eta_total"));
    if (!(ef.protocol.eta_total > 0.0 && ef.protocol.eta_total < 1.0) &&
        ef.protocol.scheme != Scheme::homodyne)
        throw SchemaError("protocol.eta_total", "protocol.eta_total must be in (0,1)");
    if (has("protocol.eta_schedule")) {
        const std::string sched = get("protocol.eta_schedule");
        if (sched == "constant")
            ef.protocol.schedule = EtaSchedule::constant;
        else if (sched == "equal_light")
            ef.protocol.schedule = EtaSchedule::equal_light;
        else
            throw SchemaError("protocol.eta_schedule",
                              "protocol.eta_schedule must be constant|equal_light");
    }
    if (has("protocol.inline_r_db"))
        ef.protocol.inline_r = db_to_r(detail::parse_double("protocol.inline_r_db", get("protocol.inline_r_db")));
    if (has("protocol.ancilla_r_db"))
        ef.protocol.ancilla_r =
            db_to_r(detail::parse_double("protocol.ancilla_r_db", get("protocol.ancilla_r_db")));
    if (has("protocol.angle_policy")) {
        const std::string pol = get("protocol.angle_policy");
        if (pol == "uniform")
            ef.protocol.angle_policy = AnglePolicy::uniform;
        else if (pol == "pair")
            ef.protocol.angle_policy = AnglePolicy::pair;
        else if (pol == "random")
            ef.protocol.angle_policy = AnglePolicy::random;
        else
            throw SchemaError("protocol.angle_policy",
                              "protocol.angle_policy must be uniform|pair|random");
    }
    if (has("protocol.homodyne_x"))
        ef.homodyne_x = detail::parse_double("protocol.homodyne_x", get("protocol.homodyne_x"));
    if (has("protocol.seed"))
        ef.protocol.seed = static_cast<std::uint64_t>(
            std::stoull(get("protocol.seed")));

    if (has("ensemble.runs")) ef.runs = detail::parse_int("ensemble.runs", get("ensemble.runs"));
    if (ef.runs < 1) throw SchemaError("ensemble.runs", "ensemble.runs must be >= 1");
    if (has("ensemble.master_seed"))
        ef.master_seed = static_cast<std::uint64_t>(std::stoull(get("ensemble.master_seed")));
    if (has("sweep.eta_total"))
        ef.eta_sweep = detail::parse_double_list("sweep.eta_total", get("sweep.eta_total"));

    if (has("outputs.wigner")) ef.out_wigner = detail::parse_bool("outputs.wigner", get("outputs.wigner"));
    if (has("outputs.wigner_range"))
        ef.wigner_range = detail::parse_double("outputs.wigner_range", get("outputs.wigner_range"));
    if (has("outputs.wigner_step"))
        ef.wigner_step = detail::parse_double("outputs.wigner_step", get("outputs.wigner_step"));
    if (has("outputs.phase")) ef.out_phase = detail::parse_bool("outputs.phase", get("outputs.phase"));
    if (has("outputs.phase_resolution"))
        ef.phase_resolution = detail::parse_int("outputs.phase_resolution", get("outputs.phase_resolution"));
    if (has("outputs.fit")) ef.out_fit = detail::parse_bool("outputs.fit", get("outputs.fit"));
    if (has("outputs.grid_correct"))
        ef.grid_correct = detail::parse_bool("outputs.grid_correct", get("outputs.grid_correct"));
    if (has("outputs.save_states"))
        ef.save_states = detail::parse_bool("outputs.save_states", get("outputs.save_states"));

    if (has("breeding.depth")) ef.breed_depth = detail::parse_int("breeding.depth", get("breeding.depth"));
    if (ef.breed_depth < 0 || ef.breed_depth > 3)
        throw SchemaError("breeding.depth", "breeding.depth must be in [0,3]");
    if (has("breeding.pairing")) {
        ef.breed_pairing = get("breeding.pairing");
        if (ef.breed_pairing != "random" && ef.breed_pairing != "ordered")
            throw SchemaError("breeding.pairing", "breeding.pairing must be random|ordered");
    }
    if (has("breeding.homodyne")) {
        ef.breed_homodyne = get("breeding.homodyne");
        if (ef.breed_homodyne != "postselect0" && ef.breed_homodyne != "sample")
            throw SchemaError("breeding.homodyne", "breeding.homodyne must be postselect0|sample");
    }
    if (has("breeding.gate")) {
        const std::string g = get("breeding.gate");
        if (g == "sum_gate")
            ef.breed_gate = BreedGate::sum_gate;
        else if (g == "beamsplitter")
            ef.breed_gate = BreedGate::beamsplitter;
        else
            throw SchemaError("breeding.gate", "breeding.gate must be sum_gate|beamsplitter");
    }

    NoiseConfig noise;
    bool any_noise = false;
    auto noise_key = [&](const std::string& k, double& target, bool is_eps) {
        if (!has(k)) return;
        target = detail::parse_double(k, get(k));
        if (is_eps ? target > 0.0 : target < 1.0) any_noise = true;
        if (!is_eps && (target < 0.0 || target > 1.0))
            throw SchemaError(k, k + " must be in [0,1]");
        if (is_eps && target < 0.0) throw SchemaError(k, k + " must be >= 0");
    };
    noise_key("noise.loss_eta_a", noise.loss_eta_a, false);
    noise_key("noise.loss_eta_b", noise.loss_eta_b, false);
    noise_key("noise.loss_eta_c", noise.loss_eta_c, false);
    noise_key("noise.dephasing_eps_a", noise.deph_eps_a, true);
    noise_key("noise.dephasing_eps_b", noise.deph_eps_b, true);
    noise_key("noise.dephasing_eps_c", noise.deph_eps_c, true);
    if (any_noise) ef.protocol.noise = noise;

    return ef;
}

inline ExperimentFile parse_experiment_file(const std::string& path,
                                            const std::map<std::string, std::string>& overrides = {}) {
    std::ifstream f(path);
    if (!f) throw SchemaError("", "cannot open experiment file " + path);
    return parse_experiment(f, overrides);
}

// ---------------------------------------------------------------------------
// generated input family for breeding experiments: random even superposition
// proportional to sum_{n<=n_max} c_n base^{2n} |2n>, c_n ~ uniform complex

inline PureState random_even_superposition(int n_max, double base, int cutoff, Rng& rng) {
    Vec v = Vec::Zero(cutoff);
    for (int n = 0; n <= n_max; ++n) {
        if (2 * n >= cutoff) break;
        const double re = rng.uniform(-1.0, 1.0), im = rng.uniform(-1.0, 1.0);
        v[2 * n] = cplx(re, im) * std::pow(base, 2.0 * n);
    }
    PureState s(std::move(v), 1, cutoff);
    s.normalize();
    return s;
}

// ---------------------------------------------------------------------------
// per-run metrics and serialization

struct RunMetrics {
    CatFit raw_fit;              // fit of the raw output
    CatFit corrected_fit;        // fit after grid correction (delta source)
    double target_fidelity = 0;  // fidelity of corrected state vs grid target cat
    bool valid = false;
};

inline RunMetrics compute_metrics(const RunRecord& rec, const ProtocolConfig& cfg,
                                  bool grid_correct) {
    RunMetrics m;
    if (rec.noisy()) {
        m.raw_fit = fit_cat(*rec.output_density);
        m.corrected_fit = m.raw_fit;
        m.target_fidelity = m.raw_fit.fidelity;
        m.valid = true;
        return m;
    }
    if (rec.output.norm2() <= 0.0) return m;
    m.raw_fit = fit_cat(rec.output);
    PureState corrected = rec.output;
    const double n_eff = cfg.input.kind == InputSpec::Kind::custom
                             ? mean_photon_number(detail::build_input(cfg.input, cfg.cutoff))
                             : cfg.input.n;
    if (grid_correct && cfg.scheme != Scheme::homodyne) {
        corrected = correct_to_grid(rec.output, n_eff, cfg.eta_total);
    }
    m.corrected_fit = fit_cat(corrected);
    const double dm = m.corrected_fit.delta_measured;
    const Parity par = rec.expected_parity == 1 ? Parity::odd : Parity::even;
    PureState target = cat(std::sqrt(std::numbers::pi / 2.0), -std::log(dm), par, cfg.cutoff);
    PureState aligned = apply(*rotation(-m.corrected_fit.axis, cfg.cutoff), corrected, 0);
    m.target_fidelity = fidelity(aligned, target);
    m.valid = true;
    return m;
}

inline std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::homodyne: return "homodyne";
        case Scheme::scheme1: return "scheme1";
        case Scheme::scheme2: return "scheme2";
    }
    return "?";
}

inline void write_run_record(const RunRecord& rec, const RunMetrics& metrics,
                             const ExperimentFile& ef, std::ostream& os,
                             const std::string& state_file = "") {
    char buf[160];
    os << "run_record schema=1\n";
    os << "scheme=" << scheme_name(rec.scheme) << "\n";
    os << "seed=" << rec.seed << "\n";
    os << "outcomes=";
    for (std::size_t i = 0; i < rec.outcomes.size(); ++i)
        os << (i ? "," : "") << rec.outcomes[i];
    os << "\n";
    if (rec.scheme == Scheme::homodyne) {
        std::snprintf(buf, sizeof buf, "homodyne_x=%.12g\n", rec.homodyne_x);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "branch_probability=%.12g\n", rec.branch_probability);
    os << buf;
    os << "parity=" << (rec.expected_parity == 0 ? "even" : rec.expected_parity == 1 ? "odd" : "n/a")
       << "\n";
    std::snprintf(buf, sizeof buf, "cross_parity_population=%.12g\n", rec.cross_parity_population);
    os << buf;
    std::snprintf(buf, sizeof buf, "tail_mass=%.12g flagged=%d\n", rec.tail_mass,
                  rec.tail_flagged ? 1 : 0);
    os << buf;
    if (metrics.valid) {
        std::snprintf(buf, sizeof buf,
                      "raw_fit alpha=%.12g r=%.12g fidelity=%.12g delta=%.12g axis=%.12g\n",
                      metrics.raw_fit.alpha_fit, metrics.raw_fit.r_fit, metrics.raw_fit.fidelity,
                      metrics.raw_fit.delta_measured, metrics.raw_fit.axis);
        os << buf;
        std::snprintf(buf, sizeof buf,
                      "corrected_fit alpha=%.12g r=%.12g fidelity=%.12g delta=%.12g\n",
                      metrics.corrected_fit.alpha_fit, metrics.corrected_fit.r_fit,
                      metrics.corrected_fit.fidelity, metrics.corrected_fit.delta_measured);
        os << buf;
        std::snprintf(buf, sizeof buf, "target_fidelity=%.12g\n", metrics.target_fidelity);
        os << buf;
    }
    if (!state_file.empty()) os << "state_file=" << state_file << "\n";
    os << "config:\n";
    for (const auto& [k, v] : ef.raw) os << "  " << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// ensemble driver

struct EnsembleRow {
    double eta_total = 0.0;
    int runs = 0;
    double mean_fidelity = 0.0, std_fidelity = 0.0;
    double mean_alpha = 0.0, std_alpha = 0.0;
    double mean_delta = 0.0, std_delta = 0.0;
    double expected = 0.0;
};

struct EnsembleResult {
    std::vector<RunRecord> records;
    std::vector<RunMetrics> metrics;
    EnsembleRow row;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= xs.size();
    return {mean, std::sqrt(var)};
}

}  // namespace detail

// Run `runs` seeded repetitions of the configured protocol with a worker
// pool; per-run seeds come from derive_seed(master_seed, index), so results
// are independent of the pool size and collection order.
inline EnsembleResult run_ensemble(const ExperimentFile& ef, double eta_total, int jobs) {
    EnsembleResult res;
    res.records.resize(ef.runs);
    res.metrics.resize(ef.runs);
    ProtocolConfig base = ef.protocol;
    base.eta_total = eta_total;
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= ef.runs || failed.load()) return;
            try {
                ProtocolConfig cfg = base;
                cfg.seed = derive_seed(ef.master_seed, static_cast<std::uint64_t>(i));
                if (ef.input_kind == "random_even") {
                    Rng gen(derive_seed(cfg.seed, 0x5eed));
                    cfg.input.custom = random_even_superposition(ef.random_even_nmax,
                                                                 ef.random_even_base, cfg.cutoff,
                                                                 gen);
                }
                RunRecord rec = run_protocol(cfg, ef.homodyne_x);
                RunMetrics met;
                if (ef.out_fit) met = compute_metrics(rec, cfg, ef.grid_correct);
                res.records[i] = std::move(rec);
                res.metrics[i] = std::move(met);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                error = e.what();
                failed.store(true);
            }
        }
    };
    const int nthreads = std::max(1, std::min(jobs, ef.runs));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw CutoffExceeded(error);

    std::vector<double> fids, alphas, deltas;
    for (int i = 0; i < ef.runs; ++i)
        if (res.metrics[i].valid) {
            fids.push_back(res.metrics[i].target_fidelity);
            alphas.push_back(res.metrics[i].raw_fit.alpha_fit);
            deltas.push_back(res.metrics[i].corrected_fit.delta_measured);
        }
    auto [mf, sf] = detail::mean_std(fids);
    auto [ma, sa] = detail::mean_std(alphas);
    auto [md, sd] = detail::mean_std(deltas);
    res.row = {eta_total, ef.runs, mf, sf, ma, sa, md, sd,
               ef.protocol.input.kind == InputSpec::Kind::custom
                   ? 0.0
                   : expected_delta(ef.protocol.input.n, eta_total)};
    return res;
}

inline void write_summary_csv(const std::vector<EnsembleRow>& rows, std::ostream& os) {
    os << "eta_total,runs,mean_fidelity,std_fidelity,mean_alpha_fit,std_alpha_fit,"
          "mean_delta,std_delta,expected_delta\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.12g,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                      r.eta_total, r.runs, r.mean_fidelity, r.std_fidelity, r.mean_alpha,
                      r.std_alpha, r.mean_delta, r.std_delta, r.expected);
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// breeding tree (Fig.-5-style pipeline)

struct BreedingTreeResult {
    std::vector<std::vector<PureState>> levels;  // levels[0] = corrected cats
    std::vector<double> weights;                 // homodyne densities per breed
};

// Generate 2^depth cats with the configured protocol, grid-correct them, and
// breed pairwise for `depth` rounds.
inline BreedingTreeResult run_breeding_tree(const ExperimentFile& ef, int jobs) {
    const int leaves = 1 << ef.breed_depth;
    ExperimentFile gen = ef;
    gen.runs = leaves;
    gen.out_fit = false;
    EnsembleResult cats = run_ensemble(gen, ef.protocol.eta_total, jobs);
    BreedingTreeResult tree;
    tree.levels.emplace_back();
    for (int i = 0; i < leaves; ++i) {
        const RunRecord& rec = cats.records[i];
        if (rec.noisy()) throw std::invalid_argument("breeding tree: pure pipeline only");
        CatFit fit = fit_cat(rec.output);
        // correct with the fitted amplitude so arbitrary inputs land on the grid
        const double n_eff = std::max(fit.alpha_fit * fit.alpha_fit / ef.protocol.eta_total, 1e-6);
        tree.levels.back().push_back(correct_to_grid(rec.output, n_eff, ef.protocol.eta_total));
    }
    Rng pair_rng(derive_seed(ef.master_seed, 0xb4eed));
    for (int level = 0; level < ef.breed_depth; ++level) {
        auto& cur = tree.levels.back();
        std::vector<int> order(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) order[i] = static_cast<int>(i);
        if (ef.breed_pairing == "random") {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[static_cast<std::size_t>(pair_rng.uniform() * i)]);
        }
        std::vector<PureState> next;
        for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
            std::optional<double> x;
            if (ef.breed_homodyne == "postselect0") x = 0.0;
            BreedRecord bred =
                breed(cur[order[i]], cur[order[i + 1]], ef.breed_gate, x, &pair_rng);
            tree.weights.push_back(bred.weight);
            next.push_back(bred.output.normalized());
        }
        tree.levels.push_back(std::move(next));
    }
    return tree;
}

}  // namespace catsim
