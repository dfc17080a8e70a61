#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpfl/objectives.hpp"
#include "dpfl/solver.hpp"
#include "dpfl/stacked_point.hpp"
#include "dpfl/trace.hpp"

namespace dpfl {

// Exact solutions of a quadratic instance.
struct ReferenceSolution {
    StackedPoint x_star_penalized;     // minimizer of F
    Eigen::VectorXd x_star_consensus;  // minimizer of (1/n) sum f_k over a common v
    StackedPoint y_star;               // min-norm multiplier of sqrt(W) x = 0
    double R_y = 0.0;                  // ||y_star||
    double F_star = 0.0;
    double f_star = 0.0;               // (1/n) sum f_k(x_star_consensus)
    double stationarity = 0.0;         // ||grad F(x_star_penalized)||
    double multiplier_residual = 0.0;  // Ker W component of grad f at the consensus solution

    TraceReference trace_reference() const { return {F_star, f_star, x_star_penalized}; }
};

// Dense factorization of (blockdiag(A_k)/n + lambda W) x = b/n, the consensus
// system (mean A) v = mean b, and y* = (W^+)^(1/2) grad f(1 (x) v) from the
// eigendecomposition of W^. Throws ConstructionError for non-quadratic losses
// or a singular system.
ReferenceSolution exact_solve_quadratic(const PenalizedProblem& problem);

// ||grad F(x)||, unmetered.
double stationarity_residual(const PenalizedProblem& problem, const StackedPoint& x);

struct ConstraintGap {
    double f_gap = 0.0;
    double residual = 0.0;
    double bound = 0.0;
    double epsilon = 0.0;  // measured F(x) - F*, clamped at 0
};

// residual = ||sqrt(W) x||, bound = 2 R_y / lambda + sqrt(2 eps / lambda) with
// eps the measured F-gap. Throws Error when lambda == 0.
ConstraintGap constraint_gap(const StackedPoint& x, const ReferenceSolution& ref, const PenalizedProblem& problem);

// lambda = R_y^2 / (2 eps).
double lambda_for_accuracy(double R_y, double epsilon);

struct ScalingSample {
    double lambda = 0.0;
    CaseSplit split;
    double lambda_min_plus = 0.0;
    ConvergenceTrace trace;
};

enum class ScalingRegime { sqrt_lambda, chi_dominated, mixed };

struct ScalingReport {
    ScalingRegime regime = ScalingRegime::mixed;
    bool fitted = false;
    std::string warning;
    double slope = 0.0;
    double expected_slope = 0.0;
    std::vector<double> lambdas;
    std::vector<double> comm_to_eps;
    std::vector<double> local_to_eps;
    double local_variation = 0.0;  // (max - min) / min of local_to_eps
};

// Regresses log(comm rounds to reach F_gap <= epsilon) on log(lambda).
// Needs >= 3 samples from one regime; a case or regime mix yields a report
// with fitted == false and a warning.
ScalingReport fit_complexity_scaling(const std::vector<ScalingSample>& samples, double epsilon);

std::string to_string(ScalingRegime regime);
void write_scaling_report(std::ostream& out, const ScalingReport& report);
void write_scaling_csv(std::ostream& out, const ScalingReport& report);

// First row of `trace` with F_gap <= epsilon, or nullptr.
const TraceRow* first_row_below(const ConvergenceTrace& trace, double epsilon);

}  // namespace dpfl
