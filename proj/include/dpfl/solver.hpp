#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpfl/objectives.hpp"
#include "dpfl/simnet.hpp"
#include "dpfl/stacked_point.hpp"
#include "dpfl/trace.hpp"

namespace dpfl {

// Which part of F is linearized in the auxiliary problem.
//   case1:     sum of local losses linearized, penalty kept exact, H = L.
//   case2:     penalty linearized, local losses kept exact, H = lambda * lambda_max.
//   decoupled: lambda = 0, every node solves its own problem, no communication.
enum class CaseId { case1, case2, decoupled };
enum class CaseOverride { automatic, case1, case2 };

std::string to_string(CaseId id);
CaseOverride case_override_from_string(const std::string& name);

struct CaseSplit {
    CaseId id = CaseId::case1;
    double H = 0.0;
};

// case1 iff lambda * lambda_max >= L (ties go to case1). L is the averaged-sum
// constant, see PenalizedProblem.
CaseSplit select_case(const PenalizedProblem& problem, CaseOverride override = CaseOverride::automatic);

struct DeltaRule {
    enum class Kind { theorem_formula, fixed };
    Kind kind = Kind::theorem_formula;
    double value = 0.0;  // used when kind == fixed
};

struct SolverConfig {
    double H = 0.0;            // 0: take H from select_case
    std::size_t restarts = 0;  // s; 0: smallest s whose restart guarantee reaches epsilon
    double R0 = 0.0;           // bound on ||z0 - x*||; 0: use ||grad F(z0)|| / mu
    double epsilon = 1e-6;
    DeltaRule delta_rule;
    std::size_t max_inner_iters = 200000;
    CaseOverride case_override = CaseOverride::automatic;
    std::uint64_t max_total_outer = 5000000;
};

// Order of the model. Only the first-order instance is built.
inline constexpr int kModelOrder = 1;

// delta = eps * mu / (864^2 (L + lambda*lambda_max + H)^2)
double inner_tolerance(double epsilon, double mu, double L, double lambda, double lambda_max, double H);

struct RestartPlan {
    double R = 0.0;
    std::size_t N = 0;
};

// R_k = R0 2^-k and N_k = max(ceil((p+1) (8 H 2^(p-1) R_k^(p-1) / (mu p!))^(2/(3p+1))), 1),
// which at p = 1 is the constant max(ceil(2 sqrt(8H/mu)), 1).
std::vector<RestartPlan> restart_schedule(double H, double mu, double R0, std::size_t restarts);

// Smallest s >= 1 with R0 2^-s <= sqrt(2 eps / mu).
std::size_t restarts_for_accuracy(double R0, double mu, double epsilon);

// Iterate of the accelerated meta-algorithm.
struct AmState {
    std::size_t k = 0;
    double A = 0.0;
    StackedPoint y;
    StackedPoint z;
    StackedPoint w;            // linearization point of the last step
    double lambda_step = 0.0;  // lambda_{k} of the last step
    double a = 0.0;            // a_{k} of the last step
};

AmState am_start(const StackedPoint& z0);

struct AmCoefficients {
    double lambda_step;
    double a;
    double A_next;
};

// At p = 1 the step condition 1/2 <= lambda H <= 1/2 pins lambda = 1/(2H);
// a solves a^2 = lambda (A + a).
AmCoefficients am_coefficients(double A, double H);

struct AuxResult {
    StackedPoint y;
    std::uint64_t iterations = 0;  // gossip rounds (case1) or max per-node gradient calls (case2)
    double residual = 0.0;         // final gradient norm of the auxiliary objective
};

// argmin_y <grad_f_w, y> + (lambda/2) <y, W y> + (H/2) ||y - w||^2.
// The Ker W component is closed-form; the orthogonal complement is solved by
// accelerated gradient with curvature in [H + lambda lambda_min+, H + lambda lambda_max],
// one gossip round per iteration, until the gradient norm is at most sqrt(2 mu_hat delta).
AuxResult solve_aux_case1(const StackedPoint& w, const StackedPoint& grad_f_w, const PenalizedProblem& problem,
                          double H, double delta, SimNetwork& net, std::size_t max_iters);

// argmin_y <penalty_grad_w, y> + (1/n) sum_k f_k(y_k) + (H/2) ||y - w||^2.
// Separable: every node runs accelerated gradient on its own block with no
// communication, to per-node accuracy delta / n.
AuxResult solve_aux_case2(const StackedPoint& w, const StackedPoint& penalty_grad_w, const PenalizedProblem& problem,
                          double H, double delta, SimNetwork& net, std::size_t max_iters);

// Audit record of one outer iteration.
struct AmStepRecord {
    std::size_t restart = 0;
    std::size_t k = 0;
    double H = 0.0;
    double lambda_step = 0.0;
    double a = 0.0;
    double A_prev = 0.0;
    double A_next = 0.0;
    std::uint64_t inner_iters = 0;
    OracleCounters before;
    OracleCounters after;
};

AmState am_step(const AmState& state, const CaseSplit& split, const PenalizedProblem& problem, double delta,
                std::size_t max_inner_iters, SimNetwork& net, AmStepRecord* record = nullptr);

// Optimal values used to turn objective values into gaps in the trace.
struct TraceReference {
    double F_star = 0.0;
    std::optional<double> f_star;
    std::optional<StackedPoint> x_star;  // enables the R0 diagnostic
};

struct RamResult {
    StackedPoint solution;
    ConvergenceTrace trace;
    std::vector<AmStepRecord> steps;
    std::vector<RestartPlan> schedule;
    std::vector<double> restart_F;  // F(z_0), F(z_1), ..., F(z_s)
    CaseSplit split;
    double delta = 0.0;
    double R0 = 0.0;
    std::vector<std::string> warnings;
    std::optional<std::string> failure;  // set by try_run_ram only
};

// Restarted accelerated meta-algorithm from z0 (zero when omitted).
// Throws NonconvergenceError from the inner solvers and ConfigError when the
// planned number of outer iterations exceeds config.max_total_outer.
RamResult run_ram(const PenalizedProblem& problem, const SolverConfig& config, SimNetwork& net,
                  const TraceReference* reference = nullptr, const std::optional<StackedPoint>& z0 = std::nullopt);

// As run_ram, but an inner nonconvergence ends the run early: the result keeps
// the trace up to that point and `failure` holds the message.
RamResult try_run_ram(const PenalizedProblem& problem, const SolverConfig& config, SimNetwork& net,
                      const TraceReference* reference = nullptr, const std::optional<StackedPoint>& z0 = std::nullopt);

}  // namespace dpfl
