#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dpfl/stacked_point.hpp"
#include "dpfl/topology.hpp"

namespace dpfl {

// Metered oracle usage of one solver run.
//
// local_grad_calls counts node-level gradient evaluations (a full averaged-sum
// gradient costs n). parallel_local_calls counts synchronized local steps: a
// round in which every node evaluates its gradient m times costs m.
// comm_rounds counts applications of W.
class OracleCounters {
public:
    std::uint64_t local_grad_calls() const noexcept { return local_; }
    std::uint64_t parallel_local_calls() const noexcept { return parallel_; }
    std::uint64_t comm_rounds() const noexcept { return comm_; }

    void charge_local(std::uint64_t node_calls, std::uint64_t parallel_calls) {
        local_ += node_calls;
        parallel_ += parallel_calls;
    }
    void charge_comm(std::uint64_t rounds = 1) { comm_ += rounds; }

    friend bool operator==(const OracleCounters&, const OracleCounters&) = default;

private:
    std::uint64_t local_ = 0;
    std::uint64_t parallel_ = 0;
    std::uint64_t comm_ = 0;
};

enum class LossKind { logistic_ridge, quadratic };

// f(v) = log(1 + exp(-y <a, v>)) + (mu_ridge / 2) ||v||^2
struct LogisticRidge {
    Eigen::VectorXd a;
    double y = 1.0;
    double mu_ridge = 0.0;
};

// f(v) = 1/2 v^T A v - b^T v, A symmetric positive definite
// f(v) = 1/2 v'Av - b'v + c
struct Quadratic {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    double c = 0.0;
};

// A node's local loss with its certified smoothness and strong convexity
// constants.
class LocalLoss {
public:
    // y must be -1 or +1; mu_ridge >= 0.
    static LocalLoss logistic(Eigen::VectorXd a, double y, double mu_ridge);
    // A must be symmetric with strictly positive smallest eigenvalue.
    static LocalLoss quadratic(Eigen::MatrixXd A, Eigen::VectorXd b, double c = 0.0);

    LossKind kind() const noexcept;
    std::size_t dim() const noexcept { return dim_; }
    double L() const noexcept { return L_; }
    double mu() const noexcept { return mu_; }

    const LogisticRidge* as_logistic() const { return std::get_if<LogisticRidge>(&data_); }
    const Quadratic* as_quadratic() const { return std::get_if<Quadratic>(&data_); }

    double value(const Eigen::VectorXd& v) const;
    // Unmetered; use local_grad() inside solvers.
    Eigen::VectorXd gradient(const Eigen::VectorXd& v) const;

private:
    LocalLoss() = default;

    std::variant<LogisticRidge, Quadratic> data_;
    std::size_t dim_ = 0;
    double L_ = 0.0;
    double mu_ = 0.0;
};

double local_value(const LocalLoss& loss, const Eigen::VectorXd& v);
Eigen::VectorXd local_grad(const LocalLoss& loss, const Eigen::VectorXd& v, OracleCounters& counters);

// F(x) = (1/n) sum_k f_k(x_k) + (lambda/2) <x, (W^ (x) I_d) x>.
//
// Constant convention: L() and mu() are the constants of the averaged sum
// (1/n) sum f_k on R^{nd}, i.e. max_k L_k / n and min_k mu_k / n.
class PenalizedProblem {
public:
    PenalizedProblem(std::vector<LocalLoss> losses, std::shared_ptr<const GossipMatrix> w, double lambda);

    std::size_t nodes() const noexcept { return losses_.size(); }
    std::size_t dim() const noexcept { return losses_.front().dim(); }
    const std::vector<LocalLoss>& losses() const noexcept { return losses_; }
    const LocalLoss& loss(std::size_t k) const { return losses_[k]; }
    const GossipMatrix& gossip() const noexcept { return *w_; }
    std::shared_ptr<const GossipMatrix> gossip_ptr() const noexcept { return w_; }
    double lambda() const noexcept { return lambda_; }

    double L_f() const noexcept { return L_f_; }
    double mu_f() const noexcept { return mu_f_; }
    double L() const noexcept { return L_f_ / static_cast<double>(nodes()); }
    double mu() const noexcept { return mu_f_ / static_cast<double>(nodes()); }
    bool all_quadratic() const;

    PenalizedProblem with_lambda(double lambda) const { return {losses_, w_, lambda}; }

private:
    std::vector<LocalLoss> losses_;
    std::shared_ptr<const GossipMatrix> w_;
    double lambda_ = 0.0;
    double L_f_ = 0.0;
    double mu_f_ = 0.0;
};

void require_layout(const PenalizedProblem& problem, const StackedPoint& x, const char* where);

// (1/n) sum_k f_k(x_k)
double sum_value(const PenalizedProblem& problem, const StackedPoint& x);
// Block k is (1/n) grad f_k(x_k). Charges n node calls and one parallel call.
StackedPoint sum_grad(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters& counters);

// Charges one communication round when lambda > 0 and counters are supplied.
double F_value(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters* counters = nullptr);
// lambda * W x; one communication round, none when lambda == 0.
StackedPoint penalty_grad(const PenalizedProblem& problem, const StackedPoint& x, OracleCounters& counters);

// Unmetered full gradient of F, for diagnostics and tests.
StackedPoint F_gradient(const PenalizedProblem& problem, const StackedPoint& x);

}  // namespace dpfl
