#pragma once

#include "swarmtraj/geom.hpp"

#include <vector>

namespace swarmtraj
{

// Waypoint i lives in P_i ∩ P_{i+1}; it is written as a convex combination of the
// intersection's vertices with weights xi_j^2 / sum_k xi_k^2, so any nonzero xi is valid.
class CoordinateChart
{
public:
    CoordinateChart() = default;

    // One junction per consecutive pair of corridor polytopes. Throws EmptyIntersection.
    static CoordinateChart build(const PolyMap &map, const std::vector<int> &corridor);
    static CoordinateChart build(const std::vector<HalfspacePolytope> &corridor);

    int junctions() const { return static_cast<int>(regions_.size()); }
    int dimension() const { return offsets_.empty() ? 0 : offsets_.back(); }
    const HalfspacePolytope &region(int i) const { return regions_[static_cast<std::size_t>(i)]; }
    const Eigen::Matrix3Xd &vertices(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    // Start of junction i's block inside xi.
    int offset(int i) const { return i == 0 ? 0 : offsets_[static_cast<std::size_t>(i - 1)]; }

    Eigen::Matrix3Xd waypoints(const Eigen::VectorXd &xi) const;
    // Gradient in xi of a function whose gradient in the waypoints is gradQ.
    Eigen::VectorXd pullback(const Eigen::VectorXd &xi, const Eigen::Matrix3Xd &gradQ) const;
    // Positive weights reproducing q exactly; throws NotInPolytope.
    Eigen::VectorXd invert(const Eigen::Matrix3Xd &q) const;

private:
    std::vector<HalfspacePolytope> regions_;
    std::vector<Eigen::Matrix3Xd> vertices_;
    std::vector<std::vector<std::vector<int>>> facets_; // vertex ids per face, in cyclic order
    std::vector<int> offsets_;
};

inline Eigen::VectorXd durationsFromTau(const Eigen::VectorXd &tau) { return tau.array().exp().matrix(); }
inline Eigen::VectorXd tauFromDurations(const Eigen::VectorXd &T) { return T.array().log().matrix(); }

} // namespace swarmtraj
