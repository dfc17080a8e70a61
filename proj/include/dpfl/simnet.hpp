#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "dpfl/objectives.hpp"
#include "dpfl/stacked_point.hpp"
#include "dpfl/topology.hpp"

namespace dpfl {

enum class RoundTag { gossip, local };

struct RoundRecord {
    std::uint64_t round_index = 0;
    RoundTag tag = RoundTag::local;
    std::uint64_t comm_rounds = 0;       // cumulative, after the round
    std::uint64_t local_grad_calls = 0;  // cumulative, after the round
};

// What a node sees during a local round: its own index and block, and a
// metered gradient oracle. Asking for any other node's block throws
// LocalityError.
class NodeContext {
public:
    NodeContext(std::size_t node, const StackedPoint& state) : node_(node), state_(&state) {}

    std::size_t node() const noexcept { return node_; }
    Eigen::VectorXd block() const { return state_->block(node_); }
    Eigen::VectorXd block(std::size_t j) const;

    Eigen::VectorXd grad(const LocalLoss& loss, const Eigen::VectorXd& v) {
        ++grad_calls_;
        return loss.gradient(v);
    }
    std::uint64_t grad_calls() const noexcept { return grad_calls_; }

private:
    std::size_t node_;
    const StackedPoint* state_;
    std::uint64_t grad_calls_ = 0;
};

using PerNodeFn = std::function<Eigen::VectorXd(NodeContext&)>;

// Synchronous round-based execution of a decentralized network. The only
// way data crosses node boundaries is gossip_round(), which is one
// communication round; local_round() runs node-local work.
class SimNetwork {
public:
    explicit SimNetwork(std::shared_ptr<const GossipMatrix> w);

    const GossipMatrix& gossip() const noexcept { return *w_; }
    const Topology& topology() const noexcept { return w_->topology(); }
    const OracleCounters& counters() const noexcept { return counters_; }
    const std::vector<RoundRecord>& round_log() const noexcept { return log_; }

    // Every node sends its block to its neighbors, then node i forms
    // sum_j w_ij x_j over the received blocks in ascending j. Bitwise equal to
    // GossipMatrix::apply.
    StackedPoint gossip_round(const StackedPoint& x);

    // Applies fn to every node in index order. Gradient calls made through the
    // NodeContext are charged: local_grad_calls += total, parallel calls +=
    // the per-node maximum.
    StackedPoint local_round(const StackedPoint& x, const PerNodeFn& fn);

    void write_round_log_csv(std::ostream& out) const;

private:
    void log(RoundTag tag);

    std::shared_ptr<const GossipMatrix> w_;
    OracleCounters counters_;
    std::vector<RoundRecord> log_;
};

// Columns: round_index, tag (gossip | local), cumulative comm_rounds,
// cumulative local_grad_calls.
void write_round_log_csv(std::ostream& out, const std::vector<RoundRecord>& log);

}  // namespace dpfl
