#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpfl/diagnostics.hpp"
#include "dpfl/objectives.hpp"
#include "dpfl/solver.hpp"
#include "dpfl/topology.hpp"

namespace dpfl {

enum class PenaltyKind { laplacian, centralized };

struct GraphSpec {
    GraphKind kind = GraphKind::path;
    std::size_t n = 20;
    bool normalize = false;
    std::vector<Edge> edges;  // custom only
    PenaltyKind penalty = PenaltyKind::laplacian;
};

enum class DataKind { logistic, quadratic_random, quadratic_file };

struct LossSpec {
    DataKind kind = DataKind::logistic;
    std::size_t d = 10;
    std::uint64_t seed = 42;
    double mu_ridge = 1e-2;
    double eig_min = 1.0;  // quadratic_random spectrum range
    double eig_max = 4.0;
    std::filesystem::path data_file;  // quadratic_file
};

struct OutputSpec {
    std::filesystem::path directory = "out";
    bool plot = true;
    bool timing = false;
    bool round_log = false;
};

struct ExperimentConfig {
    GraphSpec graph;
    LossSpec loss;
    std::vector<double> lambda_list{0.01, 0.1, 1.0, 10.0};
    SolverConfig solver;
    OutputSpec output;
};

// Flat YAML mapping with dotted keys (graph.kind, loss.seed, solver.epsilon,
// ...). Unknown keys and malformed values raise ConfigError carrying the
// 1-based line number. Relative data_file paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
// Checks invariants that do not depend on the file layout (lambda list,
// sizes, referenced files). Throws ConfigError.
void validate_config(const ExperimentConfig& config);

// path graph as printed with the experiment, n = 20, d = 10, logistic + ridge
// 1e-2, seed 42, lambda in {0.01, 0.1, 1, 10}.
ExperimentConfig reproduce_fig1_preset();

GossipMatrix build_matrix(const GraphSpec& graph);

// Logistic: feature matrix A (d x n) is drawn column by column from N(0, 1)
// with mt19937_64(seed), then the n labels uniformly from {-1, +1}.
// Quadratic: per node, a d x d N(0, 1) matrix (orthonormalized by QR), d
// eigenvalues uniform in [eig_min, eig_max], then d N(0, 1) entries of b.
std::vector<LocalLoss> generate_losses(const LossSpec& loss, std::size_t n);

// CSV with n (d + 1) rows of d numbers: node k contributes d rows of A_k then
// one row b_k.
std::vector<LocalLoss> read_quadratic_csv(std::istream& in, std::size_t n, std::size_t d);

// Exact reference for quadratic problems; for other losses F* comes from a
// tighter unmetered solve.
TraceReference reference_for(const PenalizedProblem& problem, const SolverConfig& solver);

struct LambdaOutcome {
    double lambda = 0.0;
    RamResult result;
    std::optional<std::string> failure;
    double final_F_gap = 0.0;
    double residual = 0.0;
    std::uint64_t comm_rounds = 0;
    std::uint64_t local_grads = 0;
};

// Builds the problem for `lambda`, runs RAM on a fresh network and keeps the
// partial trace when an inner solver fails to converge.
LambdaOutcome run_lambda(const ExperimentConfig& config, const std::vector<LocalLoss>& losses,
                         const std::shared_ptr<const GossipMatrix>& w, double lambda,
                         std::vector<RoundRecord>* round_log = nullptr);

std::string trace_file_name(double lambda);

void write_summary_csv(std::ostream& out, const std::vector<LambdaOutcome>& outcomes);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Static SVG: y on log10 scale (values clamped at 1e-16), linear x.
void write_svg_plot(std::ostream& out, const std::vector<PlotSeries>& series, const std::string& x_label,
                    const std::string& y_label);

struct ScalingStudy {
    std::vector<ScalingSample> samples;
    std::vector<LambdaOutcome> outcomes;  // traces moved into samples
    ScalingReport report;
    bool failed = false;
};

// Runs every lambda of the config and fits comm rounds to reach
// solver.epsilon against lambda.
ScalingStudy run_scaling_study(const ExperimentConfig& config);

// Runs every lambda, writes trace_lambda_<lambda>.csv, summary.csv and
// (optionally) convergence.svg into config.output.directory.
// Returns 0 on success, 2 if any run failed to converge.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace dpfl
