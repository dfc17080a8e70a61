#include "dpfl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dpfl/errors.hpp"

namespace dpfl {

ReferenceSolution exact_solve_quadratic(const PenalizedProblem& problem) {
    if (!problem.all_quadratic()) throw ConstructionError("exact_solve_quadratic needs quadratic losses");
    const auto n = static_cast<Eigen::Index>(problem.nodes());
    const auto d = static_cast<Eigen::Index>(problem.dim());
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto& W = problem.gossip().entries();

    // Unknown vector is the column-major d x n layout of StackedPoint.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * d, n * d);
    Eigen::VectorXd rhs(n * d);
    Eigen::MatrixXd A_mean = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd b_mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto* q = problem.loss(static_cast<std::size_t>(k)).as_quadratic();
        M.block(k * d, k * d, d, d) += inv_n * q->A;
        rhs.segment(k * d, d) = inv_n * q->b;
        A_mean += inv_n * q->A;
        b_mean += inv_n * q->b;
    }
    if (problem.lambda() > 0.0) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (W(i, j) != 0.0) M.block(i * d, j * d, d, d).diagonal().array() += problem.lambda() * W(i, j);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw ConstructionError("penalized stationarity system is singular");
    Eigen::VectorXd xs = llt.solve(rhs);

    Eigen::LLT<Eigen::MatrixXd> llt_c(A_mean);
    if (llt_c.info() != Eigen::Success) throw ConstructionError("consensus system is singular");

    ReferenceSolution ref;
    ref.x_star_penalized = StackedPoint(Eigen::Map<Eigen::MatrixXd>(xs.data(), d, n));
    ref.x_star_consensus = llt_c.solve(b_mean);

    const auto xc = StackedPoint::consensual(problem.nodes(), ref.x_star_consensus);
    Eigen::MatrixXd G(d, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        G.col(k) = inv_n * problem.loss(static_cast<std::size_t>(k)).gradient(ref.x_star_consensus);
    }

    const auto& evals = problem.gossip().eigenvalues();
    const auto& U = problem.gossip().eigenvectors();
    const double cut = 1e-9 * std::max(evals(n - 1), 0.0);
    Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd kernel_part = Eigen::MatrixXd::Zero(d, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (evals(i) > cut && cut > 0.0) {
            inv_sqrt(i) = 1.0 / std::sqrt(evals(i));
        } else {
            kernel_part += (G * U.col(i)) * U.col(i).transpose();
        }
    }
    const Eigen::MatrixXd S = U * inv_sqrt.asDiagonal() * U.transpose();
    ref.y_star = StackedPoint(G * S);
    ref.R_y = ref.y_star.norm();
    ref.multiplier_residual = kernel_part.norm();

    ref.F_star = F_value(problem, ref.x_star_penalized);
    ref.f_star = sum_value(problem, xc);
    ref.stationarity = stationarity_residual(problem, ref.x_star_penalized);
    return ref;
}

double stationarity_residual(const PenalizedProblem& problem, const StackedPoint& x) {
    return F_gradient(problem, x).norm();
}

ConstraintGap constraint_gap(const StackedPoint& x, const ReferenceSolution& ref, const PenalizedProblem& problem) {
    const double lambda = problem.lambda();
    if (!(lambda > 0.0)) throw Error("constraint gap bound is undefined for lambda = 0");
    ConstraintGap g;
    g.f_gap = sum_value(problem, x) - ref.f_star;
    g.residual = consensus_residual(problem.gossip(), x);
    g.epsilon = std::max(0.0, F_value(problem, x) - ref.F_star);
    g.bound = 2.0 * ref.R_y / lambda + std::sqrt(2.0 * g.epsilon / lambda);
    return g;
}

double lambda_for_accuracy(double R_y, double epsilon) {
    if (!(R_y > 0.0) || !(epsilon > 0.0)) throw Error("lambda_for_accuracy needs R_y > 0 and epsilon > 0");
    return R_y * R_y / (2.0 * epsilon);
}

const TraceRow* first_row_below(const ConvergenceTrace& trace, double epsilon) {
    for (const auto& r : trace.rows)
        if (r.F_gap <= epsilon) return &r;
    return nullptr;
}

std::string to_string(ScalingRegime regime) {
    switch (regime) {
        case ScalingRegime::sqrt_lambda: return "sqrt_lambda";
        case ScalingRegime::chi_dominated: return "chi_dominated";
        case ScalingRegime::mixed: return "mixed";
    }
    return "mixed";
}

namespace {

ScalingRegime regime_of(const ScalingSample& s) {
    if (s.split.id == CaseId::case2) return ScalingRegime::sqrt_lambda;
    if (s.split.id == CaseId::decoupled) return ScalingRegime::mixed;
    return s.lambda * s.lambda_min_plus < s.split.H ? ScalingRegime::sqrt_lambda : ScalingRegime::chi_dominated;
}

}  // namespace

ScalingReport fit_complexity_scaling(const std::vector<ScalingSample>& samples, double epsilon) {
    ScalingReport rep;
    if (samples.size() < 3) {
        rep.warning = "need at least 3 traces";
        return rep;
    }
    rep.regime = regime_of(samples.front());
    for (const auto& s : samples) {
        if (s.split.id != samples.front().split.id || regime_of(s) != rep.regime) {
            rep.regime = ScalingRegime::mixed;
            rep.warning = "traces span more than one case/regime; no fit";
            return rep;
        }
    }
    if (rep.regime == ScalingRegime::mixed) {
        rep.warning = "decoupled traces carry no communication; no fit";
        return rep;
    }
    rep.expected_slope = rep.regime == ScalingRegime::sqrt_lambda ? 0.5 : 0.0;

    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& s : samples) {
        const auto* row = first_row_below(s.trace, epsilon);
        if (!row) {
            rep.warning = "trace for lambda = " + format_double(s.lambda) + " never reached epsilon";
            return rep;
        }
        rep.lambdas.push_back(s.lambda);
        rep.comm_to_eps.push_back(static_cast<double>(row->comm_rounds));
        rep.local_to_eps.push_back(static_cast<double>(row->local_grad_calls));
        lx.push_back(std::log(s.lambda));
        ly.push_back(std::log(std::max(1.0, static_cast<double>(row->comm_rounds))));
    }
    const double m = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / m;
        my += ly[i] / m;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        rep.warning = "lambda values are not distinct";
        return rep;
    }
    rep.slope = sxy / sxx;
    const auto [lo, hi] = std::minmax_element(rep.local_to_eps.begin(), rep.local_to_eps.end());
    rep.local_variation = *lo > 0.0 ? (*hi - *lo) / *lo : 0.0;
    rep.fitted = true;
    return rep;
}

void write_scaling_report(std::ostream& out, const ScalingReport& rep) {
    out << "regime: " << to_string(rep.regime) << '\n';
    if (!rep.fitted) {
        out << "fit: none (" << rep.warning << ")\n";
        return;
    }
    out << "slope(log comm_rounds vs log lambda): " << format_double(rep.slope) << '\n';
    out << "expected slope: " << format_double(rep.expected_slope) << '\n';
    out << "local_grad_calls variation: " << format_double(rep.local_variation) << '\n';
}

void write_scaling_csv(std::ostream& out, const ScalingReport& rep) {
    out << "lambda,comm_rounds_to_eps,local_grad_calls_to_eps\n";
    for (std::size_t i = 0; i < rep.lambdas.size(); ++i) {
        out << format_double(rep.lambdas[i]) << ',' << format_double(rep.comm_to_eps[i]) << ','
            << format_double(rep.local_to_eps[i]) << '\n';
    }
}

}  // namespace dpfl
