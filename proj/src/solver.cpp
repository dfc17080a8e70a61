#include "dpfl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpfl/errors.hpp"

namespace dpfl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Below this the gradient of an auxiliary objective is rounding noise.
double noise_floor(double scale) { return 32.0 * kEps * scale; }

double momentum(double curv_max, double curv_min) {
    const double a = std::sqrt(curv_max);
    const double b = std::sqrt(curv_min);
    return (a - b) / (a + b);
}

struct Evaluation {
    double F = 0.0;
    double f = 0.0;
    double residual = 0.0;
};

// Unmetered evaluation for the trace.
Evaluation evaluate(const PenalizedProblem& problem, const StackedPoint& x) {
    Evaluation e;
    e.f = sum_value(problem, x);
    const double q = std::max(0.0, x.dot(problem.gossip().apply(x)));
    e.residual = std::sqrt(q);
    e.F = e.f + 0.5 * problem.lambda() * q;
    return e;
}

StackedPoint metered_sum_grad(const PenalizedProblem& problem, const StackedPoint& x, SimNetwork& net) {
    const double inv_n = 1.0 / static_cast<double>(problem.nodes());
    return net.local_round(x, [&](NodeContext& ctx) -> Eigen::VectorXd {
        return inv_n * ctx.grad(problem.loss(ctx.node()), ctx.block());
    });
}

StackedPoint metered_penalty_grad(const PenalizedProblem& problem, const StackedPoint& x, SimNetwork& net) {
    if (problem.lambda() == 0.0) return StackedPoint(x.nodes(), x.dim());
    return problem.lambda() * net.gossip_round(x);
}

// Per-node accelerated gradient on
//   <linear, v> + scale * f(v) + (H/2) ||v - center||^2
// starting at center. Returns the node's point, its gradient calls and residual.
struct NodeSolve {
    Eigen::VectorXd v;
    std::uint64_t calls = 0;
    double residual = 0.0;
    bool converged = false;
};

NodeSolve node_agd(NodeContext& ctx, const LocalLoss& loss, double scale, const Eigen::VectorXd& linear,
                   const Eigen::VectorXd& center, double H, double node_delta, std::size_t max_iters) {
    const double curv_max = scale * loss.L() + H;
    const double curv_min = scale * loss.mu() + H;
    const double beta = momentum(curv_max, curv_min);
    const double target = std::sqrt(2.0 * curv_min * node_delta);

    NodeSolve out;
    Eigen::VectorXd x_prev = center;
    Eigen::VectorXd v = center;
    double threshold = target;
    for (std::size_t t = 0; t < max_iters; ++t) {
        const Eigen::VectorXd fg = scale * ctx.grad(loss, v);
        const Eigen::VectorXd g = linear + fg + H * (v - center);
        ++out.calls;
        out.residual = g.norm();
        if (t == 0) {
            const double sol_scale = center.norm() + g.norm() / curv_min;
            threshold = std::max(target, noise_floor(linear.norm() + fg.norm() + curv_max * sol_scale));
        }
        if (out.residual <= threshold) {
            out.v = v;
            out.converged = true;
            return out;
        }
        const Eigen::VectorXd x_next = v - g / curv_max;
        v = x_next + beta * (x_next - x_prev);
        x_prev = x_next;
    }
    out.v = v;
    return out;
}

}  // namespace

std::string to_string(CaseId id) {
    switch (id) {
        case CaseId::case1: return "case1";
        case CaseId::case2: return "case2";
        case CaseId::decoupled: return "decoupled";
    }
    return "case1";
}

CaseOverride case_override_from_string(const std::string& name) {
    if (name == "auto") return CaseOverride::automatic;
    if (name == "case1") return CaseOverride::case1;
    if (name == "case2") return CaseOverride::case2;
    throw ConfigError("unknown case_override '" + name + "' (expected auto, case1 or case2)");
}

CaseSplit select_case(const PenalizedProblem& problem, CaseOverride override) {
    const double lambda = problem.lambda();
    if (lambda == 0.0) return {CaseId::decoupled, 0.0};
    const double lmax = problem.gossip().spectral_bounds().lambda_max;
    const double penalty_smoothness = lambda * lmax;
    switch (override) {
        case CaseOverride::case1: return {CaseId::case1, problem.L()};
        case CaseOverride::case2: return {CaseId::case2, penalty_smoothness};
        case CaseOverride::automatic: break;
    }
    if (penalty_smoothness >= problem.L()) return {CaseId::case1, problem.L()};
    return {CaseId::case2, penalty_smoothness};
}

double inner_tolerance(double epsilon, double mu, double L, double lambda, double lambda_max, double H) {
    const double total = L + lambda * lambda_max + H;
    constexpr double c = 864.0 * 864.0;
    return epsilon * mu / (c * total * total);
}

std::vector<RestartPlan> restart_schedule(double H, double mu, double R0, std::size_t restarts) {
    if (!(H > 0.0) || !(mu > 0.0)) throw ConfigError("restart_schedule needs H > 0 and mu > 0");
    constexpr int p = kModelOrder;
    constexpr double p_factorial = 1.0;
    const double exponent = 2.0 / (3.0 * p + 1.0);
    std::vector<RestartPlan> plan;
    plan.reserve(restarts);
    for (std::size_t k = 0; k < restarts; ++k) {
        const double Rk = std::ldexp(R0, -static_cast<int>(k));
        const double inner = 8.0 * H * std::pow(2.0, p - 1) * std::pow(Rk, p - 1) / (mu * p_factorial);
        const double Nk = std::ceil((p + 1) * std::pow(inner, exponent));
        plan.push_back({Rk, static_cast<std::size_t>(std::max(Nk, 1.0))});
    }
    return plan;
}

std::size_t restarts_for_accuracy(double R0, double mu, double epsilon) {
    const double ratio = R0 * std::sqrt(mu / (2.0 * epsilon));
    if (!(ratio > 1.0)) return 1;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(std::log2(ratio))));
}

AmState am_start(const StackedPoint& z0) {
    AmState s;
    s.y = z0;
    s.z = z0;
    s.w = z0;
    return s;
}

AmCoefficients am_coefficients(double A, double H) {
    const double lambda_step = 0.5 / H;
    const double a = 0.5 * (lambda_step + std::sqrt(lambda_step * lambda_step + 4.0 * lambda_step * A));
    return {lambda_step, a, A + a};
}

AuxResult solve_aux_case1(const StackedPoint& w, const StackedPoint& grad_f_w, const PenalizedProblem& problem,
                          double H, double delta, SimNetwork& net, std::size_t max_iters) {
    require_same_shape(w, grad_f_w, "solve_aux_case1");
    if (!(H > 0.0)) throw ConfigError("solve_aux_case1 needs H > 0");
    const double lambda = problem.lambda();

    const auto ws = split_consensus(w);
    const auto gs = split_consensus(grad_f_w);
    const Eigen::VectorXd mean = ws.mean_block - gs.mean_block / H;

    AuxResult out;
    StackedPoint u;
    if (ws.deviation.is_zero() && gs.deviation.is_zero()) {
        u = StackedPoint(w.nodes(), w.dim());
    } else if (lambda == 0.0) {
        u = ws.deviation - (1.0 / H) * gs.deviation;
    } else {
        const auto& sb = problem.gossip().spectral_bounds();
        const double curv_max = H + lambda * sb.lambda_max;
        const double curv_min = H + lambda * sb.lambda_min_plus;
        const double beta = momentum(curv_max, curv_min);
        const double target = std::sqrt(2.0 * curv_min * delta);
        const double sol_scale = ws.deviation.norm() + gs.deviation.norm() / curv_min;
        const double threshold = std::max(target, noise_floor(gs.deviation.norm() + curv_max * sol_scale));

        StackedPoint x_prev = ws.deviation;
        StackedPoint v = ws.deviation;
        bool converged = false;
        for (std::size_t t = 0; t < max_iters; ++t) {
            StackedPoint g = gs.deviation;
            g += lambda * net.gossip_round(v);
            g += H * (v - ws.deviation);
            ++out.iterations;
            out.residual = g.norm();
            if (out.residual <= threshold) {
                converged = true;
                break;
            }
            StackedPoint x_next = v - (1.0 / curv_max) * g;
            v = x_next + beta * (x_next - x_prev);
            x_prev = std::move(x_next);
        }
        if (!converged) {
            throw NonconvergenceError("case-1 auxiliary solver hit " + std::to_string(max_iters) + " iterations",
                                      out.residual);
        }
        u = std::move(v);
    }
    out.y = StackedPoint::consensual(w.nodes(), mean) + u;
    return out;
}

AuxResult solve_aux_case2(const StackedPoint& w, const StackedPoint& penalty_grad_w, const PenalizedProblem& problem,
                          double H, double delta, SimNetwork& net, std::size_t max_iters) {
    require_same_shape(w, penalty_grad_w, "solve_aux_case2");
    require_layout(problem, w, "solve_aux_case2");
    if (!(H > 0.0)) throw ConfigError("solve_aux_case2 needs H > 0");
    const double scale = 1.0 / static_cast<double>(problem.nodes());
    const double node_delta = delta * scale;

    // Each node sees its own block of w (the round state) and its own block of
    // the linear term, which it already holds after the gossip that formed it.
    AuxResult out;
    double worst = 0.0;
    bool failed = false;
    out.y = net.local_round(w, [&](NodeContext& ctx) -> Eigen::VectorXd {
        const auto k = ctx.node();
        const Eigen::VectorXd linear = penalty_grad_w.block(k);
        auto r = node_agd(ctx, problem.loss(k), scale, linear, ctx.block(), H, node_delta, max_iters);
        out.iterations = std::max(out.iterations, r.calls);
        worst = std::max(worst, r.residual);
        failed = failed || !r.converged;
        return r.v;
    });
    out.residual = worst;
    if (failed) {
        throw NonconvergenceError("case-2 auxiliary solver hit " + std::to_string(max_iters) + " iterations", worst);
    }
    return out;
}

AmState am_step(const AmState& state, const CaseSplit& split, const PenalizedProblem& problem, double delta,
                std::size_t max_inner_iters, SimNetwork& net, AmStepRecord* record) {
    const double H = split.H;
    const auto coef = am_coefficients(state.A, H);

    // Step condition at p = 1 and the defining identity of a_{k+1}.
    if (std::abs(coef.lambda_step * H - 0.5) > kEps) {
        throw std::logic_error("am_step: lambda_{k+1} H deviates from 1/2");
    }
    if (std::abs(coef.a * coef.a - coef.lambda_step * coef.A_next) > 1e-10 * coef.a * coef.a) {
        throw std::logic_error("am_step: a^2 != lambda A");
    }

    AmState next;
    next.k = state.k + 1;
    next.A = coef.A_next;
    next.lambda_step = coef.lambda_step;
    next.a = coef.a;
    next.w = state.A == 0.0 ? state.z : (state.A / coef.A_next) * state.y + (coef.a / coef.A_next) * state.z;

    const OracleCounters before = net.counters();
    AuxResult aux;
    StackedPoint full_grad;
    if (split.id == CaseId::case1) {
        const auto grad_f_w = metered_sum_grad(problem, next.w, net);
        aux = solve_aux_case1(next.w, grad_f_w, problem, H, delta, net, max_inner_iters);
        full_grad = metered_sum_grad(problem, aux.y, net);
        full_grad += metered_penalty_grad(problem, aux.y, net);
    } else if (split.id == CaseId::case2) {
        const auto pen_w = metered_penalty_grad(problem, next.w, net);
        aux = solve_aux_case2(next.w, pen_w, problem, H, delta, net, max_inner_iters);
        full_grad = metered_penalty_grad(problem, aux.y, net);
        full_grad += metered_sum_grad(problem, aux.y, net);
    } else {
        throw std::logic_error("am_step called in decoupled mode");
    }
    next.y = std::move(aux.y);
    next.z = state.z - coef.a * full_grad;

    if (record) {
        record->k = state.k;
        record->H = H;
        record->lambda_step = coef.lambda_step;
        record->a = coef.a;
        record->A_prev = state.A;
        record->A_next = coef.A_next;
        record->inner_iters = aux.iterations;
        record->before = before;
        record->after = net.counters();
    }
    return next;
}

namespace {

RamResult run_ram_impl(const PenalizedProblem& problem, const SolverConfig& config, SimNetwork& net,
                       const TraceReference* reference, const std::optional<StackedPoint>& z0, bool keep_partial) {
    if (!(config.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (net.gossip().nodes() != problem.nodes()) {
        throw DimensionError("network and problem have different node counts");
    }
    const auto clock_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    };

    RamResult result;
    StackedPoint z = z0 ? *z0 : StackedPoint(problem.nodes(), problem.dim());
    require_layout(problem, z, "run_ram");

    result.split = select_case(problem, config.case_override);
    if (config.H > 0.0 && result.split.id != CaseId::decoupled) result.split.H = config.H;
    const double mu = problem.mu();
    const double lambda = problem.lambda();
    const double lmax = lambda > 0.0 ? problem.gossip().spectral_bounds().lambda_max : 0.0;

    if (config.delta_rule.kind == DeltaRule::Kind::fixed) {
        if (!(config.delta_rule.value > 0.0)) throw ConfigError("fixed delta must be positive");
        result.delta = config.delta_rule.value;
    } else {
        result.delta = inner_tolerance(config.epsilon, mu, problem.L(), lambda, lmax, result.split.H);
    }

    std::vector<Evaluation> evals;
    std::vector<TraceRow> rows;
    auto push_row = [&](std::size_t restart, std::size_t outer, std::uint64_t inner, const StackedPoint& x) {
        const auto e = evaluate(problem, x);
        evals.push_back(e);
        TraceRow r;
        r.restart_index = restart;
        r.outer_iter = outer;
        r.inner_iters = inner;
        r.consensus_residual = e.residual;
        r.local_grad_calls = net.counters().local_grad_calls();
        r.comm_rounds = net.counters().comm_rounds();
        r.elapsed_seconds = elapsed();
        rows.push_back(r);
    };

    if (result.split.id == CaseId::decoupled) {
        // lambda = 0: independent per-node problems (1/n) f_k, no communication.
        const double scale = 1.0 / static_cast<double>(problem.nodes());
        const double delta = config.delta_rule.kind == DeltaRule::Kind::fixed
                                 ? result.delta
                                 : inner_tolerance(config.epsilon, mu, problem.L(), 0.0, 0.0, 0.0);
        result.delta = delta;
        result.restart_F.push_back(evaluate(problem, z).F);
        try {
            bool failed = false;
            double worst = 0.0;
            std::uint64_t widest = 0;
            const Eigen::VectorXd none = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.dim()));
            z = net.local_round(z, [&](NodeContext& ctx) -> Eigen::VectorXd {
                auto r = node_agd(ctx, problem.loss(ctx.node()), scale, none, ctx.block(), 0.0, delta * scale,
                                  config.max_inner_iters);
                failed = failed || !r.converged;
                worst = std::max(worst, r.residual);
                widest = std::max(widest, r.calls);
                return r.v;
            });
            if (failed) throw NonconvergenceError("decoupled node solver hit its iteration cap", worst);
            push_row(0, 0, widest, z);
            result.restart_F.push_back(evals.back().F);
        } catch (const NonconvergenceError& e) {
            if (!keep_partial) throw;
            result.failure = e.what();
        }
    } else {
        if (!(result.split.H > 0.0)) throw ConfigError("H must be positive");
        double R0 = config.R0;
        if (!(R0 > 0.0)) {
            // Strong convexity: ||z0 - x*|| <= ||grad F(z0)|| / mu.
            auto g = metered_sum_grad(problem, z, net);
            g += metered_penalty_grad(problem, z, net);
            R0 = g.norm() / mu;
            if (!(R0 > 0.0)) R0 = std::sqrt(2.0 * config.epsilon / mu);
        }
        result.R0 = R0;
        if (reference && reference->x_star) {
            const double dist = (z - *reference->x_star).norm();
            if (dist > R0) {
                result.warnings.push_back("R0 = " + format_double(R0) + " is below the true distance " +
                                          format_double(dist) + " to the minimizer");
            }
        }
        const std::size_t s = config.restarts > 0 ? config.restarts : restarts_for_accuracy(R0, mu, config.epsilon);
        result.schedule = restart_schedule(result.split.H, mu, R0, s);
        std::uint64_t planned = 0;
        for (const auto& p : result.schedule) planned += p.N;
        if (planned > config.max_total_outer) {
            throw ConfigError("schedule needs " + std::to_string(planned) + " outer iterations, cap is " +
                              std::to_string(config.max_total_outer));
        }

        result.restart_F.push_back(evaluate(problem, z).F);
        try {
            for (std::size_t r = 0; r < s; ++r) {
                AmState st = am_start(z);
                for (std::size_t k = 0; k < result.schedule[r].N; ++k) {
                    AmStepRecord rec;
                    rec.restart = r;
                    st = am_step(st, result.split, problem, result.delta, config.max_inner_iters, net, &rec);
                    result.steps.push_back(rec);
                    push_row(r, k, rec.inner_iters, st.y);
                }
                z = st.y;
                result.restart_F.push_back(evals.back().F);
            }
        } catch (const NonconvergenceError& e) {
            if (!keep_partial) throw;
            result.failure = e.what();
        }
    }

    double F_ref = 0.0;
    if (reference) {
        F_ref = reference->F_star;
    } else {
        F_ref = std::numeric_limits<double>::infinity();
        for (const auto& e : evals) F_ref = std::min(F_ref, e.F);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].F_gap = evals[i].F - F_ref;
        rows[i].f_gap = (reference && reference->f_star) ? evals[i].f - *reference->f_star
                                                         : std::numeric_limits<double>::quiet_NaN();
    }
    result.trace.rows = std::move(rows);
    result.solution = std::move(z);
    return result;
}

}  // namespace

RamResult run_ram(const PenalizedProblem& problem, const SolverConfig& config, SimNetwork& net,
                  const TraceReference* reference, const std::optional<StackedPoint>& z0) {
    return run_ram_impl(problem, config, net, reference, z0, false);
}

RamResult try_run_ram(const PenalizedProblem& problem, const SolverConfig& config, SimNetwork& net,
                      const TraceReference* reference, const std::optional<StackedPoint>& z0) {
    return run_ram_impl(problem, config, net, reference, z0, true);
}

}  // namespace dpfl
