#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dpfl/errors.hpp"
#include "dpfl/topology.hpp"
#include "test_support.hpp"

using namespace dpfl;
using namespace dpfl::testing;

namespace {

void check_gossip_invariants(const GossipMatrix& w, std::mt19937_64& rng, int samples) {
    const auto& m = w.entries();
    const auto n = m.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            REQUIRE(m(i, j) == m(j, i));
            if (i != j && !w.topology().adjacent(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
                REQUIRE(m(i, j) == 0.0);
            }
        }
    }
    CHECK((m * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
    for (int s = 0; s < samples; ++s) {
        const auto x = random_point(rng, w.nodes(), 2);
        REQUIRE(x.dot(w.apply(x)) >= -1e-12 * x.squared_norm());
    }
}

}  // namespace

TEST_CASE("build_gossip produces the graph Laplacian") {
    SUBCASE("path n=3") {
        Eigen::Matrix3d expected;
        expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
        CHECK(build_gossip(Topology::path(3), false).entries() == expected);
    }
    SUBCASE("cycle n=3") {
        Eigen::Matrix3d expected;
        expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
        CHECK(build_gossip(Topology::cycle(3), false).entries() == expected);
    }
    SUBCASE("single node is the zero matrix") {
        for (auto kind : {GraphKind::path, GraphKind::cycle, GraphKind::complete, GraphKind::star}) {
            const auto w = build_gossip(Topology::make(kind, 1), true);
            CHECK(w.entries().rows() == 1);
            CHECK(w.entries()(0, 0) == 0.0);
        }
    }
    SUBCASE("path corner pattern for larger n") {
        const auto w = build_gossip(Topology::path(8), false).entries();
        CHECK(w(0, 0) == 1);
        CHECK(w(0, 1) == -1);
        CHECK(w(7, 7) == 1);
        CHECK(w(3, 3) == 2);
        CHECK(w(3, 2) == -1);
        CHECK(w(3, 4) == -1);
    }
}

TEST_CASE("topology construction rejects bad graphs") {
    CHECK_THROWS_AS(Topology::custom(3, {{0, 0}, {1, 2}}), ConstructionError);
    CHECK_THROWS_AS(Topology::custom(3, {{0, 1}, {1, 0}, {1, 2}}), ConstructionError);
    CHECK_THROWS_AS(Topology::custom(3, {{0, 3}}), ConstructionError);
    CHECK_THROWS_AS(Topology(Topology::path(0)), ConstructionError);
    try {
        Topology::custom(4, {{0, 1}, {2, 3}});
        FAIL("expected a disconnected-graph error");
    } catch (const ConstructionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("disconnected") != std::string::npos);
        CHECK(msg.find("{0,1}") != std::string::npos);
        CHECK(msg.find("{2,3}") != std::string::npos);
    }
    CHECK(Topology::path(1).edges().empty());
}

TEST_CASE("gossip matrix validation") {
    const auto topo = Topology::path(3);
    Eigen::Matrix3d asym;
    asym << 1, -1, 0, -1.5, 2, -0.5, 0, -0.5, 0.5;
    CHECK_THROWS_AS(GossipMatrix(topo, asym), ConstructionError);
    Eigen::Matrix3d off_pattern;
    off_pattern << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    CHECK_THROWS_AS(GossipMatrix(topo, off_pattern), ConstructionError);
    Eigen::Matrix3d not_kernel;
    not_kernel << 2, -1, 0, -1, 2, -1, 0, -1, 1;
    CHECK_THROWS_AS(GossipMatrix(topo, not_kernel), ConstructionError);
    Eigen::Matrix3d not_psd;
    not_psd << -1, 1, 0, 1, -2, 1, 0, 1, -1;
    CHECK_THROWS_AS(GossipMatrix(topo, not_psd), ConstructionError);
    CHECK_THROWS_AS(GossipMatrix(topo, Eigen::MatrixXd::Zero(2, 2)), DimensionError);
}

TEST_CASE("spectral bounds") {
    SUBCASE("path n=2") {
        const auto& sb = build_gossip(Topology::path(2), false).spectral_bounds();
        CHECK(sb.lambda_max == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(sb.lambda_min_plus == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(sb.chi == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("path n=10 against Jacobi and closed form") {
        const auto w = build_gossip(Topology::path(10), false);
        const auto ev = jacobi_eigenvalues(w.entries());
        const double lmax_closed = 2.0 - 2.0 * std::cos(std::numbers::pi * 9.0 / 10.0);
        const double lmin_closed = 2.0 - 2.0 * std::cos(std::numbers::pi / 10.0);
        CHECK(ev.back() == doctest::Approx(lmax_closed).epsilon(1e-12));
        CHECK(ev[1] == doctest::Approx(lmin_closed).epsilon(1e-12));
        const auto& sb = w.spectral_bounds();
        CHECK(sb.lambda_max == doctest::Approx(3.9021).epsilon(1e-4));
        CHECK(sb.lambda_min_plus == doctest::Approx(0.0979).epsilon(1e-3));
        CHECK(sb.lambda_max == doctest::Approx(lmax_closed).epsilon(1e-12));
        CHECK(sb.lambda_min_plus == doctest::Approx(lmin_closed).epsilon(1e-12));
    }
    SUBCASE("normalized complete graph has chi = 1") {
        for (std::size_t n = 2; n <= 64; ++n) {
            const auto& sb = build_gossip(Topology::complete(n), true).spectral_bounds();
            CHECK(sb.lambda_max == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(sb.chi == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("zero matrix has no nonzero spectrum") {
        CHECK_THROWS_WITH_AS(build_gossip(Topology::path(1), false).spectral_bounds(), "no nonzero spectrum", Error);
    }
}

TEST_CASE("property: spectral bounds agree with a Jacobi oracle for n <= 64") {
    std::mt19937_64 rng(2024);
    for (std::size_t n : {2u, 3u, 5u, 8u, 13u, 21u, 34u, 64u}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto topo = random_connected(rng, n, 0.15);
            for (bool normalize : {false, true}) {
                const auto w = build_gossip(topo, normalize);
                const auto ev = jacobi_eigenvalues(w.entries());
                const double lmax = ev.back();
                double lmin = lmax;
                for (double e : ev) {
                    if (e > 1e-9 * lmax) {
                        lmin = e;
                        break;
                    }
                }
                const auto& sb = w.spectral_bounds();
                CHECK(std::abs(sb.lambda_max - lmax) <= 1e-8 * lmax);
                CHECK(std::abs(sb.lambda_min_plus - lmin) <= 1e-8 * lmin);
                CHECK(sb.chi >= 1.0);
                check_gossip_invariants(w, rng, 40);
            }
        }
    }
}

TEST_CASE("gossip invariants hold for all built-in graphs") {
    std::mt19937_64 rng(5);
    for (auto kind : {GraphKind::path, GraphKind::cycle, GraphKind::complete, GraphKind::star}) {
        for (std::size_t n : {2u, 3u, 7u, 16u}) {
            check_gossip_invariants(build_gossip(Topology::make(kind, n), false), rng, 1000);
            check_gossip_invariants(build_gossip(Topology::make(kind, n), true), rng, 100);
        }
    }
    check_gossip_invariants(centralized_penalty(6), rng, 200);
}

TEST_CASE("apply") {
    SUBCASE("consensual point maps to zero") {
        const auto w = build_gossip(Topology::cycle(5), false);
        Eigen::Vector3d v(1.5, -2.0, 0.25);
        CHECK(w.apply(StackedPoint::consensual(5, v)).is_zero());
    }
    SUBCASE("path n=3, d=1") {
        const auto w = build_gossip(Topology::path(3), false);
        StackedPoint x(3, 1);
        x.block(0)(0) = 1.0;
        const auto y = w.apply(x);
        CHECK(y.block(0)(0) == 1.0);
        CHECK(y.block(1)(0) == -1.0);
        CHECK(y.block(2)(0) == 0.0);
    }
    SUBCASE("path n=2, d=2 blockwise") {
        const auto w = build_gossip(Topology::path(2), false);
        StackedPoint x(2, 2);
        x.block(0) = Eigen::Vector2d(1, 0);
        x.block(1) = Eigen::Vector2d(0, 1);
        const auto y = w.apply(x);
        CHECK(y.block(0) == Eigen::Vector2d(1, -1));
        CHECK(y.block(1) == Eigen::Vector2d(-1, 1));
    }
    SUBCASE("block-count mismatch") {
        const auto w = build_gossip(Topology::path(3), false);
        CHECK_THROWS_AS(w.apply(StackedPoint(4, 1)), DimensionError);
    }
}

TEST_CASE("property: apply equals the dense Kronecker product") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 60; ++rep) {
        std::uniform_int_distribution<std::size_t> pick_n(1, 8), pick_d(1, 4);
        const auto n = pick_n(rng);
        const auto d = pick_d(rng);
        const auto w = build_gossip(random_connected(rng, n, 0.3), rep % 2 == 0);
        const auto x = random_point(rng, n, d);
        const Eigen::VectorXd dense = dense_kronecker(w.entries(), static_cast<Eigen::Index>(d)) * flat(x);
        const Eigen::VectorXd got = flat(w.apply(x));
        CHECK((got - dense).norm() <= 1e-12 * std::max(1.0, dense.norm()));
    }
}

TEST_CASE("consensus residual") {
    const auto w2 = build_gossip(Topology::path(2), false);
    StackedPoint x(2, 1);
    x.block(0)(0) = 0.2;
    x.block(1)(0) = -0.2;
    CHECK(consensus_residual(w2, x) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(consensus_residual(w2, StackedPoint::consensual(2, Eigen::VectorXd::Constant(1, 3.0))) == 0.0);

    const auto w3 = build_gossip(Topology::path(3), false);
    StackedPoint e(3, 1);
    e.block(0)(0) = 1.0;
    CHECK(consensus_residual(w3, e) == doctest::Approx(1.0));

    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const auto w = build_gossip(random_connected(rng, 6, 0.3), false);
        const auto p = random_point(rng, 6, 3);
        const double r = consensus_residual(w, p);
        CHECK(std::abs(r * r - p.dot(w.apply(p))) <= 1e-12 * std::max(1.0, r * r));
    }
}

TEST_CASE("split_consensus") {
    StackedPoint x(2, 1);
    x.block(0)(0) = 1.0;
    x.block(1)(0) = 3.0;
    const auto s = split_consensus(x);
    CHECK(s.mean_block(0) == 2.0);
    CHECK(s.deviation.block(0)(0) == -1.0);
    CHECK(s.deviation.block(1)(0) == 1.0);

    const Eigen::Vector3d v(0.5, -1.0, 2.0);
    const auto c = split_consensus(StackedPoint::consensual(4, v));
    CHECK(c.mean_block.isApprox(v));
    CHECK(c.deviation.norm() <= 1e-15);

    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 100; ++rep) {
        const auto p = random_point(rng, 7, 3, 5.0);
        const auto sp = split_consensus(p);
        const auto back = StackedPoint::consensual(7, sp.mean_block) + sp.deviation;
        CHECK((back - p).norm() <= 1e-14 * p.norm());
        CHECK(sp.deviation.matrix().rowwise().sum().norm() <= 1e-12 * p.norm());
        const auto cons = StackedPoint::consensual(7, random_vector(rng, 3));
        CHECK(std::abs(sp.deviation.dot(cons)) <= 1e-12 * std::max(1.0, p.norm() * cons.norm()));
    }
}

TEST_CASE("centralized penalty matches (1/n) sum ||x_k - mean||^2") {
    std::mt19937_64 rng(3);
    const std::size_t n = 5;
    const auto w = centralized_penalty(n);
    for (int rep = 0; rep < 20; ++rep) {
        const auto x = random_point(rng, n, 2);
        const auto s = split_consensus(x);
        const double direct = s.deviation.squared_norm() / static_cast<double>(n);
        CHECK(x.dot(w.apply(x)) == doctest::Approx(direct).epsilon(1e-12));
    }
}
