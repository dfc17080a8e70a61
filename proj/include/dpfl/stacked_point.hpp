#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace dpfl {

// The decision variable x = [x_1, ..., x_n]: n node blocks of dimension d.
// Stored as a d x n matrix, one column per node, so that a block is a
// contiguous column.
class StackedPoint {
public:
    StackedPoint() = default;
    StackedPoint(std::size_t nodes, std::size_t dim);
    explicit StackedPoint(Eigen::MatrixXd blocks);

    static StackedPoint zeros(std::size_t nodes, std::size_t dim) { return {nodes, dim}; }
    // 1 (x) v: every block equal to v.
    static StackedPoint consensual(std::size_t nodes, const Eigen::VectorXd& v);

    std::size_t nodes() const noexcept { return static_cast<std::size_t>(m_.cols()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

    auto block(std::size_t k) { return m_.col(static_cast<Eigen::Index>(k)); }
    auto block(std::size_t k) const { return m_.col(static_cast<Eigen::Index>(k)); }

    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    Eigen::MatrixXd& matrix() noexcept { return m_; }

    double dot(const StackedPoint& other) const;
    double squared_norm() const { return m_.squaredNorm(); }
    double norm() const { return m_.norm(); }
    bool is_zero() const { return (m_.array() == 0.0).all(); }

    StackedPoint& operator+=(const StackedPoint& o);
    StackedPoint& operator-=(const StackedPoint& o);
    StackedPoint& operator*=(double s);

    friend StackedPoint operator+(StackedPoint a, const StackedPoint& b) { return a += b; }
    friend StackedPoint operator-(StackedPoint a, const StackedPoint& b) { return a -= b; }
    friend StackedPoint operator*(double s, StackedPoint a) { return a *= s; }
    friend StackedPoint operator*(StackedPoint a, double s) { return a *= s; }

    bool same_shape(const StackedPoint& o) const { return m_.rows() == o.m_.rows() && m_.cols() == o.m_.cols(); }

private:
    Eigen::MatrixXd m_;
};

// Throws DimensionError unless a and b have the same block layout.
void require_same_shape(const StackedPoint& a, const StackedPoint& b, const char* where);

// Projection onto Ker W and its orthogonal complement.
struct ConsensusSplit {
    Eigen::VectorXd mean_block;
    StackedPoint deviation;
};

ConsensusSplit split_consensus(const StackedPoint& x);

}  // namespace dpfl
