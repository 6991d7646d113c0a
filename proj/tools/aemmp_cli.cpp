// SPDX-License-Identifier: Apache-2.0
//
// Command-line simulator front end.

#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "aemmp/aem_estimator.hpp"
#include "aemmp/channel_sim.hpp"
#include "aemmp/experiment.hpp"
#include "aemmp/json_io.hpp"
#include "aemmp/metrics.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_aggregates(const aemmp::ExperimentResult& result) {
    std::cout << aemmp::aggregate_csv(result);
}

int cmd_run(const std::string& spec_path, bool has_seed, std::uint64_t seed) {
    aemmp::ExperimentSpec spec = aemmp::experiment_spec_from_json(read_file(spec_path));
    if (has_seed) spec.seed = seed;
    const auto result = aemmp::run_experiment(spec);
    print_aggregates(result);
    if (!spec.output_path.empty()) {
        std::cout << "wrote " << spec.output_path << "_trials.csv and "
                  << spec.output_path << "_aggregate.csv\n";
    }
    return 0;
}

int cmd_phase_diagram(aemmp::ExperimentSpec base, const std::vector<int>& n_list,
                      const std::vector<int>& lc_list, double snr_db,
                      const std::string& out_path) {
    std::ostringstream csv;
    csv << "n_antennas,l_c,mean_nmse_x_db,mean_nmse_h_db,mean_rate,n_ok,n_fail\n";
    base.snr_db_list = {snr_db};
    const std::string trial_files = base.output_path;
    base.output_path.clear();
    for (int n : n_list) {
        for (int lc : lc_list) {
            aemmp::ExperimentSpec spec = base;
            spec.n_antennas = n;
            spec.l_c = lc;
            const auto result = aemmp::run_experiment(spec);
            const auto& a = result.aggregates.front();
            csv << n << ',' << lc << ',' << a.mean_nmse_x_db << ',' << a.mean_nmse_h_db
                << ',' << a.mean_rate << ',' << a.n_ok << ',' << a.n_fail << '\n';
        }
    }
    (void)trial_files;
    if (!out_path.empty()) {
        std::ofstream of(out_path);
        of << csv.str();
        std::cout << "wrote " << out_path << '\n';
    } else {
        std::cout << csv.str();
    }
    return 0;
}

int cmd_demo(std::uint64_t seed) {
    using namespace aemmp;
    constexpr double kDeg = std::numbers::pi / 180.0;

    ExperimentSpec spec;  // desk-scale defaults
    spec.n_antennas = 32;
    spec.k_users = 2;
    spec.t_len = 40;
    spec.grid_size = 40;
    spec.l_c = 2;
    spec.l_p = 5;
    spec.seed = seed;

    const ArrayGeometry geom = make_geometry(spec.geometry, spec.n_antennas, spec.seed);
    Rng scene_rng(derive_seed(spec.seed, 0, 0));
    Rng noise_rng(derive_seed(spec.seed, 0, 1));
    Rng est_rng(derive_seed(spec.seed, 0, 2));

    const ChannelScene scene = draw_scene(spec.k_users, geom, spec.l_c, spec.l_p,
                                          spec.spread_deg * kDeg, scene_rng);
    const ComplexMatrix h = synth_channel(geom, scene);
    const ComplexMatrix x = generate_signals(spec.k_users, spec.t_len, cplx(1.0, 0.0),
                                             scene_rng);
    const double snr_db = 30.0;
    const double noise_var = spec.k_users / std::pow(10.0, snr_db / 10.0);
    const ComplexMatrix y = synth_rx(h, x, noise_var, noise_rng);

    EstimatorConfig cfg;
    cfg.grid_size = spec.grid_size;
    cfg.diagnostics = &std::cout;
    const EstimationResult est = run(y, geom, spec.k_users, cfg, est_rng);

    const auto perm = match_permutation(est.X_hat, x);
    ComplexMatrix x_aligned(est.X_hat.rows(), est.X_hat.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t t = 0; t < x_aligned.cols(); ++t) {
            x_aligned(static_cast<std::size_t>(perm[i]), t) = est.X_hat(i, t);
        }
    }
    std::cout << "demo: SNR " << snr_db << " dB, NMSE_X " << nmse(x_aligned, x)
              << ", converged " << (est.converged ? "yes" : "no") << ", EM iters "
              << est.em_iters_used << "\nlearned hyper-parameters: "
              << to_json(est.learned) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Super-resolution blind channel-and-signal estimation simulator"};
    app.require_subcommand(1);

    std::string spec_path;
    std::uint64_t seed = 0;
    bool has_seed = false;

    auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON spec file");
    run_cmd->add_option("spec", spec_path, "spec file")->required();
    run_cmd->add_option("--seed", seed, "override the spec seed")->each([&](const std::string&) {
        has_seed = true;
    });

    // sweep-snr: the common scenario, fully flag-driven.
    aemmp::ExperimentSpec sweep;
    std::string sweep_out = "sweep";
    auto* sweep_cmd = app.add_subcommand("sweep-snr", "NMSE/rate versus SNR sweep");
    sweep_cmd->add_option("--geometry", sweep.geometry.kind, "ula|lens|linear|ura");
    sweep_cmd->add_option("--n", sweep.n_antennas, "antennas");
    sweep_cmd->add_option("--k", sweep.k_users, "users");
    sweep_cmd->add_option("--t", sweep.t_len, "coherence length");
    sweep_cmd->add_option("--l", sweep.grid_size, "grid size");
    sweep_cmd->add_option("--lc", sweep.l_c, "clusters");
    sweep_cmd->add_option("--lp", sweep.l_p, "paths per cluster");
    sweep_cmd->add_option("--spread-deg", sweep.spread_deg, "cluster angular spread, degrees");
    sweep_cmd->add_option("--snr", sweep.snr_db_list, "SNR points in dB")->delimiter(',');
    sweep_cmd->add_option("--trials", sweep.n_trials, "Monte-Carlo trials per SNR");
    sweep_cmd->add_option("--variant", sweep.estimator_variant, "markov|bernoulli");
    sweep_cmd->add_option("--scene", sweep.scene_type, "clustered|on_grid");
    sweep_cmd->add_option("--out", sweep_out, "output CSV prefix");
    sweep_cmd->add_option("--seed", sweep.seed, "RNG seed");

    // phase-diagram: N x L_c sweep at one SNR.
    aemmp::ExperimentSpec phase;
    std::vector<int> n_list{32, 48, 64};
    std::vector<int> lc_list{1, 2, 3};
    double phase_snr = 40.0;
    std::string phase_out = "phase_diagram.csv";
    auto* phase_cmd = app.add_subcommand("phase-diagram",
                                         "NMSE over the antennas x clusters plane");
    phase_cmd->add_option("--n-list", n_list, "antenna counts")->delimiter(',');
    phase_cmd->add_option("--lc-list", lc_list, "cluster counts")->delimiter(',');
    phase_cmd->add_option("--snr", phase_snr, "SNR in dB");
    phase_cmd->add_option("--k", phase.k_users, "users");
    phase_cmd->add_option("--t", phase.t_len, "coherence length");
    phase_cmd->add_option("--l", phase.grid_size, "grid size");
    phase_cmd->add_option("--lp", phase.l_p, "paths per cluster");
    phase_cmd->add_option("--trials", phase.n_trials, "trials per cell");
    phase_cmd->add_option("--variant", phase.estimator_variant, "markov|bernoulli");
    phase_cmd->add_option("--out", phase_out, "output CSV path");
    phase_cmd->add_option("--seed", phase.seed, "RNG seed");

    std::uint64_t demo_seed = 7;
    auto* demo_cmd = app.add_subcommand("demo", "single-trial walkthrough with diagnostics");
    demo_cmd->add_option("--seed", demo_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(spec_path, has_seed, seed);
        if (sweep_cmd->parsed()) {
            sweep.output_path = sweep_out;
            print_aggregates(aemmp::run_experiment(sweep));
            std::cout << "wrote " << sweep_out << "_trials.csv and " << sweep_out
                      << "_aggregate.csv\n";
            return 0;
        }
        if (phase_cmd->parsed()) {
            return cmd_phase_diagram(phase, n_list, lc_list, phase_snr, phase_out);
        }
        if (demo_cmd->parsed()) return cmd_demo(demo_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
