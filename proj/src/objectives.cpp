#include "dpfl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpfl/errors.hpp"

namespace dpfl {

namespace {

void require_dim(const LocalLoss& loss, const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != loss.dim()) {
        throw DimensionError("loss of dimension " + std::to_string(loss.dim()) + " evaluated at a vector of size " +
                             std::to_string(v.size()));
    }
}

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) { return std::log1p(std::exp(-std::abs(t))) + std::max(0.0, -t); }

double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

LocalLoss LocalLoss::logistic(Eigen::VectorXd a, double y, double mu_ridge) {
    if (a.size() == 0) throw ConstructionError("logistic loss needs a nonempty feature vector");
    if (y != 1.0 && y != -1.0) throw ConstructionError("logistic label must be -1 or +1");
    if (!(mu_ridge >= 0.0)) throw ConstructionError("mu_ridge must be nonnegative");
    LocalLoss loss;
    loss.dim_ = static_cast<std::size_t>(a.size());
    loss.L_ = a.squaredNorm() / 4.0 + mu_ridge;
    loss.mu_ = mu_ridge;
    loss.data_ = LogisticRidge{std::move(a), y, mu_ridge};
    return loss;
}

LocalLoss LocalLoss::quadratic(Eigen::MatrixXd A, Eigen::VectorXd b, double c) {
    if (A.rows() == 0 || A.rows() != A.cols() || A.rows() != b.size()) {
        throw DimensionError("quadratic loss needs a square A matching b");
    }
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) {
        throw ConstructionError("quadratic loss matrix is not symmetric");
    }
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(A.rows() - 1);
    if (!(lo > 0.0)) {
        throw ConstructionError("quadratic loss is not strongly convex (min eigenvalue " + std::to_string(lo) + ")");
    }
    LocalLoss loss;
    loss.dim_ = static_cast<std::size_t>(b.size());
    loss.L_ = hi;
    loss.mu_ = lo;
    loss.data_ = Quadratic{std::move(A), std::move(b), c};
    return loss;
}

LossKind LocalLoss::kind() const noexcept {
    return std::holds_alternative<LogisticRidge>(data_) ? LossKind::logistic_ridge : LossKind::quadratic;
}

double LocalLoss::value(const Eigen::VectorXd& v) const {
    require_dim(*this, v);
    if (const auto* lg = as_logistic()) {
        const double t = lg->y * lg->a.dot(v);
        return softplus_neg(t) + 0.5 * lg->mu_ridge * v.squaredNorm();
    }
    const auto& q = std::get<Quadratic>(data_);
    return 0.5 * v.dot(q.A * v) - q.b.dot(v) + q.c;
}

Eigen::VectorXd LocalLoss::gradient(const Eigen::VectorXd& v) const {
    require_dim(*this, v);
    if (const auto* lg = as_logistic()) {
        const double t = lg->y * lg->a.dot(v);
        return (-lg->y * sigmoid(-t)) * lg->a + lg->mu_ridge * v;
    }
    const auto& q = std::get<Quadratic>(data_);
    return q.A * v - q.b;
}

double local_value(const LocalLoss& loss, const Eigen::VectorXd& v) { return loss.value(v); }

Eigen::VectorXd local_grad(const LocalLoss& loss, const Eigen::VectorXd& v, OracleCounters& counters) {
    auto g = loss.gradient(v);
    counters.charge_local(1, 1);
    return g;
}

PenalizedProblem::PenalizedProblem(std::vector<LocalLoss> losses, std::shared_ptr<const GossipMatrix> w, double lambda)
    : losses_(std::move(losses)), w_(std::move(w)), lambda_(lambda) {
    if (!w_) throw ConstructionError("problem needs a gossip matrix");
    if (losses_.empty()) throw ConstructionError("problem needs at least one local loss");
    if (losses_.size() != w_->nodes()) {
        throw DimensionError(std::to_string(losses_.size()) + " losses for a " + std::to_string(w_->nodes()) +
                             "-node gossip matrix");
    }
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ConstructionError("lambda must be finite and >= 0");
    const auto d = losses_.front().dim();
    L_f_ = 0.0;
    mu_f_ = std::numeric_limits<double>::infinity();
    for (const auto& l : losses_) {
        if (l.dim() != d) throw DimensionError("local losses have different dimensions");
        L_f_ = std::max(L_f_, l.L());
        mu_f_ = std::min(mu_f_, l.mu());
    }
    if (!(mu_f_ > 0.0)) throw ConstructionError("local losses are not strongly convex (mu_f = 0)");
}

bool PenalizedProblem::all_quadratic() const {
    return std::all_of(losses_.begin(), losses_.end(),
                       [](const LocalLoss& l) { return l.kind() == LossKind::quadratic; });
}

void require_layout(const PenalizedProblem& problem, const StackedPoint& x, const char* where) {
    if (x.nodes() != problem.nodes() || x.dim() != problem.dim()) {
        throw DimensionError(std::string(where) + ": point is " + std::to_string(x.nodes()) + "x" +
                             std::to_string(x.dim()) + ", problem is " + std::to_string(problem.nodes()) + "x" +
                             std::to_string(problem.dim()));
    }
}

double sum_value(const PenalizedProblem& problem, const StackedPoint& x) {
    require_layout(problem, x, "sum_value");
    double total = 0.0;
    for (std::size_t k = 0; k < problem.nodes(); ++k) total += problem.loss(k).value(x.block(k));
    return total / static_cast<double>(problem.nodes());
}

StackedPoint sum_grad(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters& counters) {
    require_layout(problem, x, "sum_grad");
    const double inv_n = 1.0 / static_cast<double>(problem.nodes());
    StackedPoint g(x.nodes(), x.dim());
    for (std::size_t k = 0; k < problem.nodes(); ++k) g.block(k) = inv_n * problem.loss(k).gradient(x.block(k));
    counters.charge_local(problem.nodes(), 1);
    return g;
}

double F_value(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters* counters) {
    const double f = sum_value(problem, x);
    if (problem.lambda() == 0.0) return f;
    const double q = x.dot(problem.gossip().apply(x));
    if (counters) counters->charge_comm();
    return f + 0.5 * problem.lambda() * q;
}

StackedPoint penalty_grad(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters& counters) {
    require_layout(problem, x, "penalty_grad");
    if (problem.lambda() == 0.0) return StackedPoint(x.nodes(), x.dim());
    auto g = problem.gossip().apply(x);
    counters.charge_comm();
    return problem.lambda() * std::move(g);
}

StackedPoint F_gradient(const PenalizedProblem& problem, const StackedPoint& x) {
    OracleCounters scratch;
    auto g = sum_grad(problem, x, scratch);
    if (problem.lambda() > 0.0) g += problem.lambda() * problem.gossip().apply(x);
    return g;
}

}  // namespace dpfl
