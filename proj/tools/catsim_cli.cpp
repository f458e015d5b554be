// Batch driver for the cat/GKP preparation simulator.
//
//   catsim prepare --config FILE --out DIR [--seed N] [--runs N]
//                  [--set key=value ...] [--jobs N]
//   catsim breed   --config FILE --out DIR [--seed N] [--set ...] [--jobs N]
//   catsim analyze --state FILE [--wigner] [--phase] [--fit] [--out DIR]
//
// Exit codes: 0 success, 2 configuration/schema error, 3 cutoff exceeded.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "catsim/experiment.hpp"

namespace fs = std::filesystem;
using namespace catsim;

namespace {

std::map<std::string, std::string> collect_overrides(const std::vector<std::string>& sets,
                                                     std::optional<std::uint64_t> seed,
                                                     std::optional<int> runs) {
    std::map<std::string, std::string> overrides;
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw SchemaError(s, "--set expects key=value, got '" + s + "'");
        overrides[detail::trim(s.substr(0, eq))] = detail::trim(s.substr(eq + 1));
    }
    if (seed) overrides["ensemble.master_seed"] = std::to_string(*seed);
    if (runs) overrides["ensemble.runs"] = std::to_string(*runs);
    return overrides;
}

void write_run_artifacts(const ExperimentFile& ef, const EnsembleResult& res, const fs::path& dir) {
    fs::create_directories(dir);
    for (int i = 0; i < static_cast<int>(res.records.size()); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "run_%04d.txt", i);
        std::string state_name;
        const RunRecord& rec = res.records[i];
        if (ef.save_states) {
            char sname[64];
            std::snprintf(sname, sizeof sname, "run_%04d_state.txt", i);
            state_name = sname;
            if (rec.noisy())
                save_state_file(*rec.output_density, (dir / sname).string());
            else
                save_state_file(rec.output, (dir / sname).string());
        }
        std::ofstream f(dir / name);
        write_run_record(rec, res.metrics[i], ef, f, state_name);
        if (ef.out_wigner && !rec.noisy() && rec.output.norm2() > 0) {
            GridSpec g;
            g.q_min = -ef.wigner_range;
            g.q_max = ef.wigner_range;
            g.p_min = -ef.wigner_range;
            g.p_max = ef.wigner_range;
            g.step = ef.wigner_step;
            char wname[64];
            std::snprintf(wname, sizeof wname, "run_%04d_wigner.csv", i);
            std::ofstream wf(dir / wname);
            wigner_to_csv(wigner(rec.output, g), wf);
        }
        if (ef.out_phase && !rec.noisy() && rec.output.norm2() > 0) {
            char pname[64];
            std::snprintf(pname, sizeof pname, "run_%04d_phase.csv", i);
            std::ofstream pf(dir / pname);
            phase_to_csv(phase_distribution(rec.output, ef.phase_resolution), pf);
        }
    }
}

int cmd_prepare(const std::string& config_path, const std::string& out_dir,
                const std::map<std::string, std::string>& overrides, int jobs) {
    ExperimentFile ef = parse_experiment_file(config_path, overrides);
    const fs::path out(out_dir);
    fs::create_directories(out);
    std::vector<double> etas = ef.eta_sweep;
    if (etas.empty()) etas.push_back(ef.protocol.eta_total);
    std::vector<EnsembleRow> rows;
    for (double eta : etas) {
        EnsembleResult res = run_ensemble(ef, eta, jobs);
        rows.push_back(res.row);
        fs::path dir = out;
        if (etas.size() > 1) {
            char sub[48];
            std::snprintf(sub, sizeof sub, "eta_%g", eta);
            dir = out / sub;
        }
        write_run_artifacts(ef, res, dir);
    }
    std::ofstream sf(out / "summary.csv");
    write_summary_csv(rows, sf);
    return 0;
}

int cmd_breed(const std::string& config_path, const std::string& out_dir,
              const std::map<std::string, std::string>& overrides, int jobs) {
    ExperimentFile ef = parse_experiment_file(config_path, overrides);
    const fs::path out(out_dir);
    fs::create_directories(out);
    BreedingTreeResult tree = run_breeding_tree(ef, jobs);
    GridSpec g;
    g.q_min = -ef.wigner_range;
    g.q_max = ef.wigner_range;
    g.p_min = -ef.wigner_range;
    g.p_max = ef.wigner_range;
    g.step = ef.wigner_step;
    for (std::size_t level = 0; level < tree.levels.size(); ++level)
        for (std::size_t i = 0; i < tree.levels[level].size(); ++i) {
            char name[80];
            std::snprintf(name, sizeof name, "level_%zu_state_%02zu", level, i);
            if (ef.save_states)
                save_state_file(tree.levels[level][i], (out / (std::string(name) + ".txt")).string());
            if (ef.out_wigner) {
                std::ofstream wf(out / (std::string(name) + "_wigner.csv"));
                wigner_to_csv(wigner(tree.levels[level][i], g), wf);
            }
        }
    std::ofstream bf(out / "breed_summary.txt");
    bf << "levels=" << tree.levels.size() - 1 << "\n";
    for (std::size_t level = 0; level < tree.levels.size(); ++level)
        bf << "level_" << level << "_states=" << tree.levels[level].size() << "\n";
    char buf[64];
    for (std::size_t i = 0; i < tree.weights.size(); ++i) {
        std::snprintf(buf, sizeof buf, "breed_%02zu_weight=%.12g\n", i, tree.weights[i]);
        bf << buf;
    }
    return 0;
}

int cmd_analyze(const std::string& state_path, const std::string& out_dir, bool do_wigner,
                bool do_phase, bool do_fit, double wigner_range, double wigner_step,
                int phase_resolution) {
    LoadedState st = load_state_file(state_path);
    const fs::path out(out_dir);
    fs::create_directories(out);
    GridSpec g;
    g.q_min = -wigner_range;
    g.q_max = wigner_range;
    g.p_min = -wigner_range;
    g.p_max = wigner_range;
    g.step = wigner_step;
    if (do_wigner) {
        std::ofstream wf(out / "wigner.csv");
        wigner_to_csv(st.is_pure ? wigner(st.pure, g) : wigner(st.density, g), wf);
    }
    if (do_phase) {
        std::ofstream pf(out / "phase.csv");
        phase_to_csv(st.is_pure ? phase_distribution(st.pure, phase_resolution)
                                : phase_distribution(st.density, phase_resolution),
                     pf);
    }
    if (do_fit) {
        CatFit fit = st.is_pure ? fit_cat(st.pure) : fit_cat(st.density);
        std::ofstream ff(out / "fit.txt");
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "alpha_fit=%.12g\nr_fit=%.12g\nparity=%s\nfidelity=%.12g\n"
                      "delta_measured=%.12g\naxis=%.12g\n",
                      fit.alpha_fit, fit.r_fit, fit.parity_fit == Parity::even ? "even" : "odd",
                      fit.fidelity, fit.delta_measured, fit.axis);
        ff << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"truncated-Fock-basis simulator for squeezed-cat and GKP state preparation"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", state_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;

    auto* prepare = app.add_subcommand("prepare", "run a seeded experiment ensemble");
    prepare->add_option("--config", config_path, "experiment file")->required();
    prepare->add_option("--out", out_dir, "output directory")->required();
    prepare->add_option("--seed", seed, "override ensemble.master_seed");
    prepare->add_option("--runs", runs, "override ensemble.runs");
    prepare->add_option("--set", sets, "override any config key (key=value)");
    prepare->add_option("--jobs", jobs, "worker pool size");

    auto* breed = app.add_subcommand("breed", "generate cats and run a breeding tree");
    breed->add_option("--config", config_path, "experiment file")->required();
    breed->add_option("--out", out_dir, "output directory")->required();
    breed->add_option("--seed", seed, "override ensemble.master_seed");
    breed->add_option("--set", sets, "override any config key (key=value)");
    breed->add_option("--jobs", jobs, "worker pool size");

    bool do_wigner = false, do_phase = false, do_fit = false;
    double wigner_range = 6.0, wigner_step = 0.05;
    int phase_resolution = 512;
    auto* analyze = app.add_subcommand("analyze", "compute diagnostics for a saved state");
    analyze->add_option("--state", state_path, "state file")->required();
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_flag("--wigner", do_wigner, "write wigner.csv");
    analyze->add_flag("--phase", do_phase, "write phase.csv");
    analyze->add_flag("--fit", do_fit, "write fit.txt");
    analyze->add_option("--wigner-range", wigner_range, "wigner grid half-range");
    analyze->add_option("--wigner-step", wigner_step, "wigner grid step");
    analyze->add_option("--phase-resolution", phase_resolution, "phase grid points");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (prepare->parsed())
            return cmd_prepare(config_path, out_dir, collect_overrides(sets, seed, runs), jobs);
        if (breed->parsed())
            return cmd_breed(config_path, out_dir, collect_overrides(sets, seed, runs), jobs);
        if (analyze->parsed())
            return cmd_analyze(state_path, out_dir, do_wigner, do_phase, do_fit, wigner_range,
                               wigner_step, phase_resolution);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!e.key().empty()) std::cerr << "offending key: " << e.key() << "\n";
        return 2;
    } catch (const CutoffExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
