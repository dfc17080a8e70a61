// dpfl: experiment runner for penalized decentralized personalized learning.
//
//   dpfl solve          --config cfg.yaml --lambda 1
//   dpfl sweep-lambda   --preset reproduce-fig1 --out out/
//   dpfl spectra        --graph complete --nodes 16 --normalize
//   dpfl verify-theorem1 --config quad.yaml
//   dpfl scaling        --config quad.yaml --lambda 1 --lambda 4 --lambda 16
//
// Exit codes: 0 success, 1 configuration error, 2 nonconvergence.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpfl/diagnostics.hpp"
#include "dpfl/errors.hpp"
#include "dpfl/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<double> lambdas;
    bool no_plot = false;
    bool timing = false;
    bool round_log = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "experiment config (flat YAML)");
    cmd->add_option("--preset", f.preset, "named preset")->check(CLI::IsMember({"reproduce-fig1"}));
    cmd->add_option("--out", f.out_dir, "output directory");
    cmd->add_option("--seed", f.seed, "data seed");
    cmd->add_option("--lambda", f.lambdas, "penalty weight (repeatable)");
    cmd->add_flag("--no-plot", f.no_plot, "skip convergence.svg");
    cmd->add_flag("--timing", f.timing, "write wall-clock elapsed_seconds instead of 0");
    cmd->add_flag("--round-log", f.round_log, "write rounds_lambda_<lambda>.csv");
}

dpfl::ExperimentConfig resolve(const CommonFlags& f, bool default_quadratic) {
    dpfl::ExperimentConfig cfg;
    if (!f.config_path.empty() && !f.preset.empty()) throw dpfl::ConfigError("--config and --preset are exclusive");
    if (!f.config_path.empty()) {
        cfg = dpfl::load_config(f.config_path);
    } else if (f.preset == "reproduce-fig1") {
        cfg = dpfl::reproduce_fig1_preset();
    } else if (default_quadratic) {
        cfg.graph.n = 10;
        cfg.loss.kind = dpfl::DataKind::quadratic_random;
        cfg.loss.d = 5;
        cfg.lambda_list = {0.1, 1.0, 10.0};
        cfg.solver.epsilon = 1e-8;
    }
    if (f.seed) cfg.loss.seed = *f.seed;
    if (!f.lambdas.empty()) cfg.lambda_list = f.lambdas;
    if (!f.out_dir.empty()) cfg.output.directory = f.out_dir;
    if (f.no_plot) cfg.output.plot = false;
    if (f.timing) cfg.output.timing = true;
    if (f.round_log) cfg.output.round_log = true;
    dpfl::validate_config(cfg);
    return cfg;
}

int cmd_spectra(const dpfl::GraphSpec& g) {
    const auto w = dpfl::build_matrix(g);
    std::cout << "graph: " << dpfl::to_string(g.kind) << " n=" << g.n << (g.normalize ? " normalized" : "") << '\n';
    const auto& sb = w.spectral_bounds();
    std::cout << std::setprecision(12) << "lambda_max: " << sb.lambda_max << '\n'
              << "lambda_min_plus: " << sb.lambda_min_plus << '\n'
              << "chi: " << sb.chi << '\n';
    return 0;
}

int cmd_verify_theorem1(const dpfl::ExperimentConfig& cfg, double accuracy) {
    if (cfg.loss.kind == dpfl::DataKind::logistic) {
        throw dpfl::ConfigError(
            "verify-theorem1 needs quadratic losses (loss.kind quadratic_random or quadratic_file)");
    }
    const auto w = std::make_shared<const dpfl::GossipMatrix>(dpfl::build_matrix(cfg.graph));
    const auto losses = dpfl::generate_losses(cfg.loss, cfg.graph.n);
    std::filesystem::create_directories(cfg.output.directory);
    std::ofstream csv(cfg.output.directory / "theorem1.csv");
    csv << "lambda,f_gap,residual,bound,epsilon,holds\n";

    int status = 0;
    bool all_hold = true;
    auto check = [&](double lambda) {
        const dpfl::PenalizedProblem problem(losses, w, lambda);
        const auto ref = dpfl::exact_solve_quadratic(problem);
        dpfl::SimNetwork net(w);
        const auto tr = ref.trace_reference();
        const auto res = dpfl::try_run_ram(problem, cfg.solver, net, &tr);
        if (res.failure) status = 2;
        const auto gap = dpfl::constraint_gap(res.solution, ref, problem);
        const bool holds = gap.residual <= gap.bound + 1e-12;
        all_hold = all_hold && holds;
        csv << dpfl::format_double(lambda) << ',' << dpfl::format_double(gap.f_gap) << ','
            << dpfl::format_double(gap.residual) << ',' << dpfl::format_double(gap.bound) << ','
            << dpfl::format_double(gap.epsilon) << ',' << (holds ? "true" : "false") << '\n';
        std::cout << "lambda=" << dpfl::format_double(lambda) << " residual=" << dpfl::format_double(gap.residual)
                  << " bound=" << dpfl::format_double(gap.bound) << " f_gap=" << dpfl::format_double(gap.f_gap)
                  << (holds ? " ok" : " VIOLATED") << '\n';
        return std::make_pair(ref, gap);
    };
    std::optional<double> R_y;
    for (double lambda : cfg.lambda_list) {
        if (lambda == 0.0) continue;
        R_y = check(lambda).first.R_y;
    }
    if (R_y && *R_y > 0.0) {
        const double lambda = dpfl::lambda_for_accuracy(*R_y, accuracy);
        const auto gap = check(lambda).second;
        const double target = 2.0 * accuracy / *R_y;
        std::cout << "R_y=" << dpfl::format_double(*R_y) << " accuracy=" << dpfl::format_double(accuracy)
                  << " lambda=R_y^2/(2 eps)=" << dpfl::format_double(lambda)
                  << " residual=" << dpfl::format_double(gap.residual)
                  << " target 2 eps/R_y=" << dpfl::format_double(target)
                  << (gap.residual <= target ? " ok" : " VIOLATED") << '\n';
    }
    if (status == 0 && !all_hold) std::cout << "bound violated\n";
    return status;
}

int cmd_scaling(const dpfl::ExperimentConfig& cfg) {
    const auto study = dpfl::run_scaling_study(cfg);
    std::filesystem::create_directories(cfg.output.directory);
    for (const auto& s : study.samples) {
        std::ofstream f(cfg.output.directory / dpfl::trace_file_name(s.lambda));
        dpfl::write_trace_csv(f, s.trace, cfg.output.timing);
    }
    dpfl::write_scaling_report(std::cout, study.report);
    std::ofstream txt(cfg.output.directory / "scaling.txt");
    dpfl::write_scaling_report(txt, study.report);
    std::ofstream csv(cfg.output.directory / "scaling.csv");
    dpfl::write_scaling_csv(csv, study.report);
    return study.failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized personalized learning with a gossip penalty: restarted accelerated solver"};
    app.require_subcommand(1);

    CommonFlags solve_f, sweep_f, thm_f, scale_f, spectra_f;
    auto* solve = app.add_subcommand("solve", "run one lambda");
    add_common(solve, solve_f);
    auto* sweep = app.add_subcommand("sweep-lambda", "run every lambda of the config");
    add_common(sweep, sweep_f);
    auto* thm = app.add_subcommand("verify-theorem1", "constraint-gap report on a quadratic instance");
    add_common(thm, thm_f);
    double accuracy = 1e-2;
    thm->add_option("--accuracy", accuracy, "epsilon for lambda = R_y^2 / (2 epsilon)");
    auto* scaling = app.add_subcommand("scaling", "fit communication complexity against lambda");
    add_common(scaling, scale_f);
    auto* spectra = app.add_subcommand("spectra", "print spectral bounds of a gossip matrix");
    add_common(spectra, spectra_f);
    std::string graph_kind;
    std::size_t nodes = 0;
    bool normalize = false;
    spectra->add_option("--graph", graph_kind, "path | cycle | complete | star");
    spectra->add_option("--nodes", nodes, "node count");
    spectra->add_flag("--normalize", normalize, "scale so that lambda_max = 1");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*spectra) {
            auto cfg = resolve(spectra_f, false);
            if (!graph_kind.empty()) cfg.graph.kind = dpfl::graph_kind_from_string(graph_kind);
            if (nodes > 0) cfg.graph.n = nodes;
            if (normalize) cfg.graph.normalize = true;
            return cmd_spectra(cfg.graph);
        }
        if (*solve) {
            auto cfg = resolve(solve_f, false);
            if (cfg.lambda_list.size() != 1) {
                throw dpfl::ConfigError("solve runs exactly one lambda; pass --lambda or use sweep-lambda");
            }
            return dpfl::run_experiment(cfg, std::cout);
        }
        if (*sweep) return dpfl::run_experiment(resolve(sweep_f, false), std::cout);
        if (*thm) return cmd_verify_theorem1(resolve(thm_f, true), accuracy);
        if (*scaling) return cmd_scaling(resolve(scale_f, true));
    } catch (const dpfl::NonconvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const dpfl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
