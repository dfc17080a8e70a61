#include "dpfl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dpfl/errors.hpp"

namespace dpfl {

ExperimentConfig reproduce_fig1_preset() {
    ExperimentConfig cfg;
    cfg.graph.kind = GraphKind::path;
    cfg.graph.n = 20;
    cfg.loss.kind = DataKind::logistic;
    cfg.loss.d = 10;
    cfg.loss.seed = 42;
    cfg.loss.mu_ridge = 1e-2;
    cfg.lambda_list = {0.01, 0.1, 1.0, 10.0};
    cfg.solver.epsilon = 1e-6;
    cfg.output.directory = "out";
    return cfg;
}

GossipMatrix build_matrix(const GraphSpec& graph) {
    if (graph.penalty == PenaltyKind::centralized) return centralized_penalty(graph.n);
    const auto topo =
        graph.kind == GraphKind::custom ? Topology::custom(graph.n, graph.edges) : Topology::make(graph.kind, graph.n);
    return build_gossip(topo, graph.normalize);
}

std::vector<LocalLoss> generate_losses(const LossSpec& spec, std::size_t n) {
    const auto d = static_cast<Eigen::Index>(spec.d);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<LocalLoss> losses;
    losses.reserve(n);

    if (spec.kind == DataKind::logistic) {
        Eigen::MatrixXd A(d, static_cast<Eigen::Index>(n));
        for (Eigen::Index k = 0; k < A.cols(); ++k)
            for (Eigen::Index i = 0; i < d; ++i) A(i, k) = normal(rng);
        std::bernoulli_distribution coin(0.5);
        for (std::size_t k = 0; k < n; ++k) {
            const double y = coin(rng) ? 1.0 : -1.0;
            losses.push_back(LocalLoss::logistic(A.col(static_cast<Eigen::Index>(k)), y, spec.mu_ridge));
        }
        return losses;
    }
    if (spec.kind == DataKind::quadratic_random) {
        std::uniform_real_distribution<double> eig(spec.eig_min, spec.eig_max);
        for (std::size_t k = 0; k < n; ++k) {
            Eigen::MatrixXd G(d, d);
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index i = 0; i < d; ++i) G(i, j) = normal(rng);
            const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
            Eigen::VectorXd ev(d);
            for (Eigen::Index i = 0; i < d; ++i) ev(i) = eig(rng);
            Eigen::VectorXd b(d);
            for (Eigen::Index i = 0; i < d; ++i) b(i) = normal(rng);
            Eigen::MatrixXd A = Q * ev.asDiagonal() * Q.transpose();
            A = 0.5 * (A + A.transpose()).eval();
            losses.push_back(LocalLoss::quadratic(std::move(A), std::move(b)));
        }
        return losses;
    }
    std::ifstream in(spec.data_file);
    if (!in) throw ConfigError("cannot open " + spec.data_file.string());
    return read_quadratic_csv(in, n, spec.d);
}

std::vector<LocalLoss> read_quadratic_csv(std::istream& in, std::size_t n, std::size_t d) {
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        Eigen::VectorXd r(static_cast<Eigen::Index>(d));
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= d) throw ConfigError("quadratic csv line " + std::to_string(lineno) + ": too many columns");
            try {
                r(static_cast<Eigen::Index>(c++)) = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError("quadratic csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (c != d)
            throw ConfigError("quadratic csv line " + std::to_string(lineno) + ": expected " + std::to_string(d) +
                              " columns");
        rows.push_back(std::move(r));
    }
    if (rows.size() != n * (d + 1)) {
        throw ConfigError("quadratic csv has " + std::to_string(rows.size()) + " rows, expected " +
                          std::to_string(n * (d + 1)));
    }
    std::vector<LocalLoss> losses;
    const auto dd = static_cast<Eigen::Index>(d);
    for (std::size_t k = 0; k < n; ++k) {
        Eigen::MatrixXd A(dd, dd);
        for (Eigen::Index i = 0; i < dd; ++i) A.row(i) = rows[k * (d + 1) + static_cast<std::size_t>(i)].transpose();
        losses.push_back(LocalLoss::quadratic(std::move(A), rows[k * (d + 1) + d]));
    }
    return losses;
}

TraceReference reference_for(const PenalizedProblem& problem, const SolverConfig& solver) {
    if (problem.all_quadratic()) return exact_solve_quadratic(problem).trace_reference();
    SolverConfig tight = solver;
    tight.epsilon = std::min(solver.epsilon * 1e-4, 1e-12);
    tight.restarts = 0;
    SimNetwork scratch(problem.gossip_ptr());
    const auto r = run_ram(problem, tight, scratch);
    TraceReference ref;
    ref.F_star = *std::min_element(r.restart_F.begin(), r.restart_F.end());
    return ref;
}

LambdaOutcome run_lambda(const ExperimentConfig& config, const std::vector<LocalLoss>& losses,
                         const std::shared_ptr<const GossipMatrix>& w, double lambda,
                         std::vector<RoundRecord>* round_log) {
    LambdaOutcome out;
    out.lambda = lambda;
    const PenalizedProblem problem(losses, w, lambda);
    const auto ref = reference_for(problem, config.solver);
    SimNetwork net(w);
    out.result = try_run_ram(problem, config.solver, net, &ref);
    out.failure = out.result.failure;
    if (!out.result.trace.rows.empty()) {
        const auto& last = out.result.trace.rows.back();
        out.final_F_gap = last.F_gap;
        out.residual = last.consensus_residual;
    }
    out.comm_rounds = net.counters().comm_rounds();
    out.local_grads = net.counters().local_grad_calls();
    if (round_log) *round_log = net.round_log();
    return out;
}

std::string trace_file_name(double lambda) { return "trace_lambda_" + format_double(lambda) + ".csv"; }

void write_summary_csv(std::ostream& out, const std::vector<LambdaOutcome>& outcomes) {
    out << "lambda,final_F_gap,residual,comm_rounds,local_grads,status\n";
    for (const auto& o : outcomes) {
        out << format_double(o.lambda) << ',' << format_double(o.final_F_gap) << ',' << format_double(o.residual) << ','
            << o.comm_rounds << ',' << o.local_grads << ',' << (o.failure ? "nonconverged" : "ok") << '\n';
    }
}

ScalingStudy run_scaling_study(const ExperimentConfig& config) {
    validate_config(config);
    const auto w = std::make_shared<const GossipMatrix>(build_matrix(config.graph));
    const auto losses = generate_losses(config.loss, config.graph.n);
    ScalingStudy study;
    for (double lambda : config.lambda_list) {
        auto o = run_lambda(config, losses, w, lambda);
        study.failed = study.failed || o.failure.has_value();
        ScalingSample s;
        s.lambda = lambda;
        s.split = o.result.split;
        s.lambda_min_plus = lambda > 0.0 ? w->spectral_bounds().lambda_min_plus : 0.0;
        s.trace = std::move(o.result.trace);
        study.samples.push_back(std::move(s));
        study.outcomes.push_back(std::move(o));
    }
    study.report = fit_complexity_scaling(study.samples, config.solver.epsilon);
    return study;
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
    validate_config(config);
    const auto w = std::make_shared<const GossipMatrix>(build_matrix(config.graph));
    const auto losses = generate_losses(config.loss, config.graph.n);
    const auto& dir = config.output.directory;
    std::filesystem::create_directories(dir);

    std::vector<LambdaOutcome> outcomes;
    std::vector<PlotSeries> series;
    for (double lambda : config.lambda_list) {
        std::vector<RoundRecord> rounds;
        auto o = run_lambda(config, losses, w, lambda, config.output.round_log ? &rounds : nullptr);
        {
            std::ofstream f(dir / trace_file_name(lambda));
            write_trace_csv(f, o.result.trace, config.output.timing);
        }
        if (config.output.round_log) {
            std::ofstream f(dir / ("rounds_lambda_" + format_double(lambda) + ".csv"));
            write_round_log_csv(f, rounds);
        }
        log << "lambda=" << format_double(lambda) << " case=" << to_string(o.result.split.id)
            << " H=" << format_double(o.result.split.H) << " restarts=" << o.result.schedule.size()
            << " comm_rounds=" << o.comm_rounds << " local_grads=" << o.local_grads
            << " F_gap=" << format_double(o.final_F_gap) << " residual=" << format_double(o.residual)
            << (o.failure ? " NONCONVERGED: " + *o.failure : std::string()) << '\n';
        for (const auto& wmsg : o.result.warnings) log << "  warning: " << wmsg << '\n';

        PlotSeries s;
        s.label = "lambda = " + format_double(lambda);
        for (const auto& r : o.result.trace.rows) {
            s.x.push_back(static_cast<double>(r.comm_rounds));
            s.y.push_back(r.F_gap);
        }
        series.push_back(std::move(s));
        outcomes.push_back(std::move(o));
    }
    {
        std::ofstream f(dir / "summary.csv");
        write_summary_csv(f, outcomes);
    }
    if (config.output.plot) {
        std::ofstream f(dir / "convergence.svg");
        write_svg_plot(f, series, "communication rounds", "F(x) - F*");
    }
    for (const auto& o : outcomes)
        if (o.failure) return 2;
    return 0;
}

}  // namespace dpfl
