#include "dpfl/simnet.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include "dpfl/errors.hpp"

namespace dpfl {

Eigen::VectorXd NodeContext::block(std::size_t j) const {
    if (j != node_) {
        throw LocalityError("node " + std::to_string(node_) + " tried to read the block of node " + std::to_string(j) +
                            " during a local round");
    }
    return state_->block(j);
}

SimNetwork::SimNetwork(std::shared_ptr<const GossipMatrix> w) : w_(std::move(w)) {
    if (!w_) throw ConstructionError("network needs a gossip matrix");
}

StackedPoint SimNetwork::gossip_round(const StackedPoint& x) {
    const auto n = w_->nodes();
    if (x.nodes() != n) {
        throw DimensionError("gossip_round: point has " + std::to_string(x.nodes()) + " blocks, network has " +
                             std::to_string(n) + " nodes");
    }
    // Inboxes hold the blocks a node received this round (its own included).
    std::vector<std::vector<std::pair<std::size_t, Eigen::VectorXd>>> inbox(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto j : w_->support(i)) inbox[i].emplace_back(j, x.block(j));
    }
    StackedPoint out(n, x.dim());
    for (std::size_t i = 0; i < n; ++i) {
        auto acc = out.block(i);
        for (const auto& [j, msg] : inbox[i]) acc += (*w_)(i, j) * msg;
    }
    counters_.charge_comm();
    log(RoundTag::gossip);
    return out;
}

StackedPoint SimNetwork::local_round(const StackedPoint& x, const PerNodeFn& fn) {
    if (x.nodes() != w_->nodes()) {
        throw DimensionError("local_round: point has " + std::to_string(x.nodes()) + " blocks, network has " +
                             std::to_string(w_->nodes()) + " nodes");
    }
    StackedPoint out(x.nodes(), x.dim());
    std::uint64_t total = 0;
    std::uint64_t widest = 0;
    for (std::size_t i = 0; i < x.nodes(); ++i) {
        NodeContext ctx(i, x);
        Eigen::VectorXd v = fn(ctx);
        if (static_cast<std::size_t>(v.size()) != x.dim()) {
            throw DimensionError("local_round: node " + std::to_string(i) + " produced a block of size " +
                                 std::to_string(v.size()) + ", expected " + std::to_string(x.dim()));
        }
        out.block(i) = v;
        total += ctx.grad_calls();
        widest = std::max(widest, ctx.grad_calls());
    }
    counters_.charge_local(total, widest);
    log(RoundTag::local);
    return out;
}

void SimNetwork::log(RoundTag tag) {
    log_.push_back(RoundRecord{static_cast<std::uint64_t>(log_.size()), tag, counters_.comm_rounds(),
                               counters_.local_grad_calls()});
}

void SimNetwork::write_round_log_csv(std::ostream& out) const { dpfl::write_round_log_csv(out, log_); }

void write_round_log_csv(std::ostream& out, const std::vector<RoundRecord>& log) {
    out << "round_index,tag,comm_rounds,local_grad_calls\n";
    for (const auto& r : log) {
        out << r.round_index << ',' << (r.tag == RoundTag::gossip ? "gossip" : "local") << ',' << r.comm_rounds << ','
            << r.local_grad_calls << '\n';
    }
}

}  // namespace dpfl
