#include <doctest.h>

#include <random>
#include <sstream>

#include "dpfl/errors.hpp"
#include "dpfl/simnet.hpp"
#include "test_support.hpp"

using namespace dpfl;
using namespace dpfl::testing;

namespace {

std::shared_ptr<const GossipMatrix> laplacian(const Topology& t) {
    return std::make_shared<const GossipMatrix>(build_gossip(t, false));
}

bool bitwise_equal(const StackedPoint& a, const StackedPoint& b) {
    return a.nodes() == b.nodes() && a.dim() == b.dim() && (a.matrix().array() == b.matrix().array()).all();
}

std::uint64_t gossip_entries(const SimNetwork& net) {
    std::uint64_t k = 0;
    for (const auto& r : net.round_log()) k += r.tag == RoundTag::gossip;
    return k;
}

}  // namespace

TEST_CASE("gossip_round examples") {
    SimNetwork net(laplacian(Topology::cycle(5)));
    const auto x = StackedPoint::consensual(5, Eigen::Vector3d(1, -2, 3));
    const auto y = net.gossip_round(x);
    CHECK(y.norm() <= 1e-14);
    CHECK(net.counters().comm_rounds() == 1);
    CHECK(net.counters().local_grad_calls() == 0);

    std::mt19937_64 rng(5);
    const auto z = random_point(rng, 5, 3);
    const auto w2 = net.gossip_round(net.gossip_round(z));
    CHECK(net.counters().comm_rounds() == 3);
    const auto dense = dense_kronecker(net.gossip().entries(), 3);
    CHECK((flat(w2) - dense * dense * flat(z)).norm() <= 1e-12 * std::max(1.0, flat(z).norm()));

    CHECK_THROWS_AS(net.gossip_round(StackedPoint(4, 3)), DimensionError);
}

TEST_CASE("property: gossip_round is bitwise apply and matches the dense oracle") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rep % 8;
        const std::size_t d = 1 + rep % 4;
        auto w = std::make_shared<const GossipMatrix>(build_gossip(random_connected(rng, n, 0.4), rep % 3 == 0));
        SimNetwork net(w);
        const auto x = random_point(rng, n, d, 3.0);
        const auto y = net.gossip_round(x);
        CHECK(bitwise_equal(y, w->apply(x)));
        const auto dense = dense_kronecker(w->entries(), static_cast<Eigen::Index>(d));
        CHECK((flat(y) - dense * flat(x)).norm() <= 1e-12 * std::max(1.0, flat(x).norm()));
        // Laplacian columns sum to zero, so the blocks of Wx sum to zero.
        CHECK(y.matrix().rowwise().sum().norm() <= 1e-12 * std::max(1.0, flat(x).norm()));
    }
}

TEST_CASE("property: no cross-talk between non-adjacent nodes") {
    std::mt19937_64 rng(3);
    for (const auto& topo : {Topology::path(7), Topology::star(7), Topology::path(12), Topology::star(12)}) {
        auto w = laplacian(topo);
        const auto n = topo.nodes();
        for (int rep = 0; rep < 5; ++rep) {
            const auto base = random_point(rng, n, 2);
            SimNetwork net(w);
            const auto ref = net.gossip_round(base);
            for (std::size_t j = 0; j < n; ++j) {
                auto planted = base;
                planted.block(j) = Eigen::Vector2d(1e6, -7.5e5);
                const auto out = net.gossip_round(planted);
                for (std::size_t i = 0; i < n; ++i) {
                    if ((*w)(i, j) != 0.0) continue;
                    CHECK((out.block(i).array() == ref.block(i).array()).all());
                }
            }
        }
    }
}

TEST_CASE("local_round examples") {
    SUBCASE("identity keeps x and counters") {
        SimNetwork net(laplacian(Topology::path(4)));
        std::mt19937_64 rng(8);
        const auto x = random_point(rng, 4, 3);
        const auto y = net.local_round(x, [](NodeContext& ctx) { return ctx.block(); });
        CHECK(bitwise_equal(x, y));
        CHECK(net.counters() == OracleCounters{});
    }
    SUBCASE("per-node gradient descent reaches the per-node minimizers without communication") {
        const auto problem = two_node_instance(0.0);
        SimNetwork net(problem.gossip_ptr());
        StackedPoint x(2, 1);
        for (int it = 0; it < 200; ++it) {
            x = net.local_round(x, [&](NodeContext& ctx) -> Eigen::VectorXd {
                const auto& loss = problem.losses()[ctx.node()];
                return ctx.block() - 0.5 * ctx.grad(loss, ctx.block());
            });
        }
        CHECK(x.block(0)(0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(x.block(1)(0) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(net.counters().comm_rounds() == 0);
        CHECK(net.counters().local_grad_calls() == 400);
        CHECK(net.counters().parallel_local_calls() == 200);
    }
    SUBCASE("one gradient per node charges n") {
        std::mt19937_64 rng(9);
        const auto losses = random_quadratics(rng, 6, 2);
        SimNetwork net(laplacian(Topology::complete(6)));
        net.local_round(StackedPoint(6, 2),
                        [&](NodeContext& ctx) { return ctx.grad(losses[ctx.node()], ctx.block()); });
        CHECK(net.counters().local_grad_calls() == 6);
        CHECK(net.counters().parallel_local_calls() == 1);
    }
    SUBCASE("uneven work charges the widest node to the parallel count") {
        std::mt19937_64 rng(10);
        const auto losses = random_quadratics(rng, 3, 2);
        SimNetwork net(laplacian(Topology::path(3)));
        net.local_round(StackedPoint(3, 2), [&](NodeContext& ctx) {
            Eigen::VectorXd v = ctx.block();
            for (std::size_t k = 0; k <= ctx.node() * 2; ++k) v = ctx.grad(losses[ctx.node()], v);
            return v;
        });
        CHECK(net.counters().local_grad_calls() == 1 + 3 + 5);
        CHECK(net.counters().parallel_local_calls() == 5);
    }
}

TEST_CASE("local_round errors") {
    SimNetwork net(laplacian(Topology::path(3)));
    CHECK_THROWS_AS(
        net.local_round(StackedPoint(3, 2), [](NodeContext& ctx) { return ctx.block((ctx.node() + 1) % 3); }),
        LocalityError);
    CHECK_NOTHROW(net.local_round(StackedPoint(3, 2), [](NodeContext& ctx) { return ctx.block(ctx.node()); }));
    CHECK_THROWS_AS(net.local_round(StackedPoint(3, 2), [](NodeContext&) { return Eigen::VectorXd::Zero(5).eval(); }),
                    DimensionError);
    CHECK_THROWS_AS(net.local_round(StackedPoint(2, 2), [](NodeContext& ctx) { return ctx.block(); }), DimensionError);
}

TEST_CASE("round log") {
    SimNetwork net(laplacian(Topology::path(3)));
    std::mt19937_64 rng(4);
    auto x = random_point(rng, 3, 2);
    const auto losses = random_quadratics(rng, 3, 2);
    x = net.gossip_round(x);
    x = net.local_round(x, [&](NodeContext& ctx) { return ctx.grad(losses[ctx.node()], ctx.block()); });
    x = net.gossip_round(x);
    CHECK(net.round_log().size() == 3);
    CHECK(gossip_entries(net) == net.counters().comm_rounds());
    std::ostringstream out;
    net.write_round_log_csv(out);
    CHECK(out.str() ==
          "round_index,tag,comm_rounds,local_grad_calls\n"
          "0,gossip,1,0\n"
          "1,local,1,3\n"
          "2,gossip,2,3\n");
}

TEST_CASE("property: identical inputs give identical runs") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        const auto losses = random_quadratics(rng, 5, 3);
        SimNetwork net(laplacian(Topology::cycle(5)));
        auto x = random_point(rng, 5, 3);
        for (int it = 0; it < 20; ++it) {
            x = net.gossip_round(x);
            x = net.local_round(x, [&](NodeContext& ctx) -> Eigen::VectorXd {
                return ctx.block() - 0.1 * ctx.grad(losses[ctx.node()], ctx.block());
            });
        }
        std::ostringstream log;
        net.write_round_log_csv(log);
        return std::make_pair(x, log.str());
    };
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        const auto a = run(seed);
        const auto b = run(seed);
        CHECK(bitwise_equal(a.first, b.first));
        CHECK(a.second == b.second);
    }
}
