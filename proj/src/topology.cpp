#include "dpfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dpfl/errors.hpp"

namespace dpfl {

namespace {

constexpr double kKernelTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kZeroEigenRel = 1e-9;
constexpr double kResidualClamp = 1e-12;

std::vector<std::vector<std::size_t>> components(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<int> seen(n, 0);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::vector<std::size_t> comp;
        std::vector<std::size_t> stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            comp.push_back(v);
            for (auto u : adj[v]) {
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

}  // namespace

std::string to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::path: return "path";
        case GraphKind::cycle: return "cycle";
        case GraphKind::complete: return "complete";
        case GraphKind::star: return "star";
        case GraphKind::custom: return "custom";
    }
    return "custom";
}

GraphKind graph_kind_from_string(const std::string& name) {
    if (name == "path") return GraphKind::path;
    if (name == "cycle") return GraphKind::cycle;
    if (name == "complete") return GraphKind::complete;
    if (name == "star") return GraphKind::star;
    if (name == "custom") return GraphKind::custom;
    throw ConfigError("unknown graph kind '" + name + "'");
}

Topology::Topology(std::size_t n, GraphKind kind, std::vector<Edge> edges)
    : n_(n), kind_(kind), edges_(std::move(edges)), adj_(n) {
    if (n_ == 0) throw ConstructionError("topology needs at least one node");
    std::set<Edge> unique;
    for (auto& [i, j] : edges_) {
        if (i >= n_ || j >= n_) {
            throw ConstructionError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                    ") out of range for n = " + std::to_string(n_));
        }
        if (i == j) throw ConstructionError("self-loop at node " + std::to_string(i));
        if (i > j) std::swap(i, j);
        if (!unique.insert({i, j}).second) {
            throw ConstructionError("duplicate edge (" + std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    }
    std::sort(edges_.begin(), edges_.end());
    for (const auto& [i, j] : edges_) {
        adj_[i].push_back(j);
        adj_[j].push_back(i);
    }
    for (auto& a : adj_) std::sort(a.begin(), a.end());

    const auto comps = components(n_, adj_);
    if (comps.size() > 1) {
        std::ostringstream msg;
        msg << "graph is disconnected: " << comps.size() << " components";
        for (const auto& c : comps) {
            msg << " {";
            for (std::size_t t = 0; t < c.size(); ++t) msg << (t ? "," : "") << c[t];
            msg << "}";
        }
        throw ConstructionError(msg.str());
    }
}

Topology Topology::path(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Topology(n, GraphKind::path, std::move(e));
}

Topology Topology::cycle(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    if (n >= 3) e.emplace_back(0, n - 1);
    return Topology(n, GraphKind::cycle, std::move(e));
}

Topology Topology::complete(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Topology(n, GraphKind::complete, std::move(e));
}

Topology Topology::star(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 1; i < n; ++i) e.emplace_back(0, i);
    return Topology(n, GraphKind::star, std::move(e));
}

Topology Topology::custom(std::size_t n, const std::vector<Edge>& edges) {
    return Topology(n, GraphKind::custom, edges);
}

Topology Topology::make(GraphKind kind, std::size_t n) {
    switch (kind) {
        case GraphKind::path: return path(n);
        case GraphKind::cycle: return cycle(n);
        case GraphKind::complete: return complete(n);
        case GraphKind::star: return star(n);
        case GraphKind::custom: break;
    }
    throw ConstructionError("custom topology requires an explicit edge list");
}

bool Topology::adjacent(std::size_t i, std::size_t j) const {
    const auto& a = adj_.at(i);
    return std::binary_search(a.begin(), a.end(), j);
}

GossipMatrix::GossipMatrix(Topology topology, Eigen::MatrixXd entries)
    : topology_(std::move(topology)), entries_(std::move(entries)) {
    const auto n = static_cast<Eigen::Index>(topology_.nodes());
    if (entries_.rows() != n || entries_.cols() != n) {
        throw DimensionError("gossip matrix is " + std::to_string(entries_.rows()) + "x" +
                             std::to_string(entries_.cols()) + ", topology has " + std::to_string(n) + " nodes");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (entries_(i, j) != entries_(j, i)) {
                throw ConstructionError("gossip matrix is not symmetric at (" + std::to_string(i) + ", " +
                                        std::to_string(j) + ")");
            }
            if (i != j && entries_(i, j) != 0.0 &&
                !topology_.adjacent(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
                throw ConstructionError("gossip matrix entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") is nonzero but the nodes are not adjacent");
            }
        }
    }
    const Eigen::VectorXd row_sums = entries_.rowwise().sum();
    if (row_sums.cwiseAbs().maxCoeff() > kKernelTol) {
        throw ConstructionError(
            "all-ones vector is not in the kernel (max |W1| = " + std::to_string(row_sums.cwiseAbs().maxCoeff()) + ")");
    }

    // Dense symmetric eigensolver; desk-scale only (n <= ~512). Power
    // iteration on the Laplacian would replace this for large graphs.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_);
    if (eig.info() != Eigen::Success) throw ConstructionError("eigendecomposition of gossip matrix failed");
    eigenvalues_ = eig.eigenvalues();
    eigenvectors_ = eig.eigenvectors();
    if (eigenvalues_(0) < -kPsdTol) {
        throw ConstructionError("gossip matrix is not positive semi-definite (min eigenvalue " +
                                std::to_string(eigenvalues_(0)) + ")");
    }

    support_.resize(topology_.nodes());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (entries_(i, j) != 0.0) support_[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
        }
    }

    const double lmax = eigenvalues_(n - 1);
    if (lmax > 0.0) {
        const double cut = kZeroEigenRel * lmax;
        double lmin_plus = lmax;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (eigenvalues_(k) > cut) {
                lmin_plus = eigenvalues_(k);
                break;
            }
        }
        spectral_ = SpectralBounds{lmax, lmin_plus, lmax / lmin_plus};
    }
}

const SpectralBounds& GossipMatrix::spectral_bounds() const {
    if (!spectral_) throw Error("no nonzero spectrum");
    return *spectral_;
}

StackedPoint GossipMatrix::apply(const StackedPoint& x) const {
    if (x.nodes() != nodes()) {
        throw DimensionError("apply: point has " + std::to_string(x.nodes()) + " blocks, gossip matrix is " +
                             std::to_string(nodes()) + "x" + std::to_string(nodes()));
    }
    StackedPoint out(x.nodes(), x.dim());
    for (std::size_t i = 0; i < nodes(); ++i) {
        auto acc = out.block(i);
        for (auto j : support_[i]) acc += (*this)(i, j) * x.block(j);
    }
    return out;
}

GossipMatrix GossipMatrix::scaled(double c) const { return GossipMatrix(topology_, c * entries_); }

GossipMatrix build_gossip(const Topology& topology, bool normalize) {
    const auto n = static_cast<Eigen::Index>(topology.nodes());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : topology.edges()) {
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(j);
        lap(a, b) = -1.0;
        lap(b, a) = -1.0;
        lap(a, a) += 1.0;
        lap(b, b) += 1.0;
    }
    GossipMatrix w(topology, std::move(lap));
    if (!normalize || n == 1) return w;
    return w.scaled(1.0 / w.spectral_bounds().lambda_max);
}

GossipMatrix centralized_penalty(std::size_t n) {
    const double nn = static_cast<double>(n);
    return build_gossip(Topology::complete(n), false).scaled(1.0 / (nn * nn));
}

double consensus_residual(const GossipMatrix& w, const StackedPoint& x) {
    const double q = x.dot(w.apply(x));
    if (q < -kResidualClamp) {
        throw ConstructionError("negative quadratic form <x, Wx> = " + std::to_string(q) +
                                " (gossip matrix is not PSD)");
    }
    return std::sqrt(std::max(q, 0.0));
}

}  // namespace dpfl
