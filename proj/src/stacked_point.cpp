#include "dpfl/stacked_point.hpp"

#include <string>

#include "dpfl/errors.hpp"

namespace dpfl {

StackedPoint::StackedPoint(std::size_t nodes, std::size_t dim)
    : m_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(nodes))) {}

StackedPoint::StackedPoint(Eigen::MatrixXd blocks) : m_(std::move(blocks)) {}

StackedPoint StackedPoint::consensual(std::size_t nodes, const Eigen::VectorXd& v) {
    StackedPoint p(nodes, static_cast<std::size_t>(v.size()));
    p.m_.colwise() = v;
    return p;
}

double StackedPoint::dot(const StackedPoint& other) const {
    require_same_shape(*this, other, "StackedPoint::dot");
    return (m_.array() * other.m_.array()).sum();
}

StackedPoint& StackedPoint::operator+=(const StackedPoint& o) {
    require_same_shape(*this, o, "StackedPoint::operator+=");
    m_ += o.m_;
    return *this;
}

StackedPoint& StackedPoint::operator-=(const StackedPoint& o) {
    require_same_shape(*this, o, "StackedPoint::operator-=");
    m_ -= o.m_;
    return *this;
}

StackedPoint& StackedPoint::operator*=(double s) {
    m_ *= s;
    return *this;
}

void require_same_shape(const StackedPoint& a, const StackedPoint& b, const char* where) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(where) + ": shape " + std::to_string(a.nodes()) + "x" +
                             std::to_string(a.dim()) + " vs " + std::to_string(b.nodes()) + "x" +
                             std::to_string(b.dim()));
    }
}

ConsensusSplit split_consensus(const StackedPoint& x) {
    ConsensusSplit out;
    out.mean_block = x.matrix().rowwise().mean();
    Eigen::MatrixXd dev = x.matrix();
    dev.colwise() -= out.mean_block;
    out.deviation = StackedPoint(std::move(dev));
    return out;
}

}  // namespace dpfl
