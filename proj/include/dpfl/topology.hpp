#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dpfl/stacked_point.hpp"

namespace dpfl {

enum class GraphKind { path, cycle, complete, star, custom };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

using Edge = std::pair<std::size_t, std::size_t>;

// Undirected, connected communication graph. Edges are stored normalized
// (i < j) and sorted. Immutable after construction.
class Topology {
public:
    static Topology path(std::size_t n);
    // For n < 3 a ring degenerates to the path.
    static Topology cycle(std::size_t n);
    static Topology complete(std::size_t n);
    // Node 0 is the hub.
    static Topology star(std::size_t n);
    // Throws ConstructionError on self-loops, duplicates, out-of-range indices
    // or a disconnected graph.
    static Topology custom(std::size_t n, const std::vector<Edge>& edges);
    static Topology make(GraphKind kind, std::size_t n);

    std::size_t nodes() const noexcept { return n_; }
    GraphKind kind() const noexcept { return kind_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    bool adjacent(std::size_t i, std::size_t j) const;
    // Sorted neighbor lists (excluding the node itself).
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return adj_[i]; }

private:
    Topology(std::size_t n, GraphKind kind, std::vector<Edge> edges);

    std::size_t n_ = 0;
    GraphKind kind_ = GraphKind::custom;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> adj_;
};

struct SpectralBounds {
    double lambda_max = 0.0;
    double lambda_min_plus = 0.0;
    double chi = 0.0;
};

// Symmetric PSD matrix W^ with W^ 1 = 0 supported on the graph pattern.
// The Kronecker lift W = W^ (x) I_d is never formed; apply() works blockwise.
// Spectral bounds are computed once at construction and cached.
class GossipMatrix {
public:
    // Validates symmetry (bitwise), kernel, PSD and sparsity pattern.
    GossipMatrix(Topology topology, Eigen::MatrixXd entries);

    std::size_t nodes() const noexcept { return topology_.nodes(); }
    const Topology& topology() const noexcept { return topology_; }
    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    double operator()(std::size_t i, std::size_t j) const {
        return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    // Indices j with w_ij != 0, ascending, diagonal included.
    const std::vector<std::size_t>& support(std::size_t i) const { return support_[i]; }

    // Full eigenvalue list, ascending.
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }

    // Throws Error("no nonzero spectrum") for the zero matrix (n = 1).
    const SpectralBounds& spectral_bounds() const;

    // (W^ (x) I_d) x. Output block i is the ascending-j sum of w_ij x_j over the
    // support of row i.
    StackedPoint apply(const StackedPoint& x) const;

    // Returns c * W^ on the same graph.
    GossipMatrix scaled(double c) const;

private:
    Topology topology_;
    Eigen::MatrixXd entries_;
    std::vector<std::vector<std::size_t>> support_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    std::optional<SpectralBounds> spectral_;
};

// Graph Laplacian D - A; with `normalize` the result is divided by its largest
// eigenvalue so that lambda_max = 1.
GossipMatrix build_gossip(const Topology& topology, bool normalize);

// Gossip matrix whose quadratic form is the centralized penalty
// (1/n) sum_k ||x_k - mean||^2, i.e. (1/n)(I - 11^T/n).
GossipMatrix centralized_penalty(std::size_t n);

// sqrt(<x, W x>) == ||sqrt(W) x||. Inner products in [-1e-12, 0) are clamped to 0;
// anything more negative raises ConstructionError (PSD violation).
double consensus_residual(const GossipMatrix& w, const StackedPoint& x);

}  // namespace dpfl
