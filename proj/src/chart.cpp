#include "swarmtraj/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace swarmtraj
{

namespace
{

// vertices on each face ordered by angle about the face centroid
std::vector<std::vector<int>> facetCycles(const HalfspacePolytope &P, const Eigen::Matrix3Xd &V)
{
    std::vector<std::vector<int>> out;
    const double scale = std::max(1.0, V.cwiseAbs().maxCoeff());
    for (int f = 0; f < P.faceCount(); f++)
    {
        const Vec3 n = P.normals.row(f).transpose();
        std::vector<int> ids;
        for (int j = 0; j < V.cols(); j++)
        {
            if (std::abs(n.dot(V.col(j)) - P.offsets(f)) <= 1e-7 * scale)
                ids.push_back(j);
        }
        if (ids.size() < 3)
            continue;
        Vec3 c = Vec3::Zero();
        for (int j : ids)
            c += V.col(j);
        c /= static_cast<double>(ids.size());
        const Vec3 u = (V.col(ids[0]) - c).normalized();
        const Vec3 w = n.cross(u);
        std::vector<std::pair<double, int>> ang;
        for (int j : ids)
        {
            const Vec3 d = V.col(j) - c;
            ang.emplace_back(std::atan2(d.dot(w), d.dot(u)), j);
        }
        std::sort(ang.begin(), ang.end());
        std::vector<int> cyc;
        for (const auto &a : ang)
            cyc.push_back(a.second);
        out.push_back(std::move(cyc));
    }
    return out;
}

} // namespace

CoordinateChart CoordinateChart::build(const PolyMap &map, const std::vector<int> &corridor)
{
    std::vector<HalfspacePolytope> polys;
    for (int id : corridor)
        polys.push_back(map.polytope(id));
    return build(polys);
}

CoordinateChart CoordinateChart::build(const std::vector<HalfspacePolytope> &corridor)
{
    CoordinateChart ch;
    int total = 0;
    for (std::size_t i = 0; i + 1 < corridor.size(); i++)
    {
        HalfspacePolytope both = HalfspacePolytope::intersect(corridor[i], corridor[i + 1]);
        both.interior = 0.5 * (corridor[i].interior + corridor[i + 1].interior);
        std::vector<Vec3> verts;
        try
        {
            both.interior = chebyshevLikeCenter(both);
            verts = enumerateVertices(both, both.interior);
        }
        catch (const Error &e)
        {
            throw Error(ErrorCode::EmptyIntersection,
                        "junction " + std::to_string(i) + " has no interior: " + std::string(e.what()));
        }
        const auto active = activeHalfspaces(both, verts);
        HalfspacePolytope reduced;
        reduced.normals.resize(static_cast<Eigen::Index>(active.size()), 3);
        reduced.offsets.resize(static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); k++)
        {
            reduced.normals.row(static_cast<Eigen::Index>(k)) = both.normals.row(active[k]);
            reduced.offsets(static_cast<Eigen::Index>(k)) = both.offsets(active[k]);
        }
        reduced.interior = both.interior;

        Eigen::Matrix3Xd V(3, static_cast<Eigen::Index>(verts.size()));
        for (std::size_t j = 0; j < verts.size(); j++)
            V.col(static_cast<Eigen::Index>(j)) = verts[j];
        ch.facets_.push_back(facetCycles(reduced, V));
        ch.regions_.push_back(std::move(reduced));
        total += static_cast<int>(V.cols());
        ch.vertices_.push_back(std::move(V));
        ch.offsets_.push_back(total);
    }
    return ch;
}

Eigen::Matrix3Xd CoordinateChart::waypoints(const Eigen::VectorXd &xi) const
{
    Eigen::Matrix3Xd q(3, junctions());
    for (int i = 0; i < junctions(); i++)
    {
        const auto &V = vertices(i);
        const Eigen::VectorXd w = xi.segment(offset(i), V.cols()).array().square().matrix();
        q.col(i) = V * w / w.sum();
    }
    return q;
}

Eigen::VectorXd CoordinateChart::pullback(const Eigen::VectorXd &xi, const Eigen::Matrix3Xd &gradQ) const
{
    Eigen::VectorXd g(dimension());
    for (int i = 0; i < junctions(); i++)
    {
        const auto &V = vertices(i);
        const auto x = xi.segment(offset(i), V.cols());
        const double S = x.squaredNorm();
        const Vec3 q = V * x.array().square().matrix() / S;
        const Vec3 gq = gradQ.col(i);
        for (Eigen::Index j = 0; j < V.cols(); j++)
            g(offset(i) + j) = 2.0 * x(j) * (V.col(j) - q).dot(gq) / S;
    }
    return g;
}

Eigen::VectorXd CoordinateChart::invert(const Eigen::Matrix3Xd &q) const
{
    if (q.cols() != junctions())
    {
        throw Error(ErrorCode::InvalidArgument, "one waypoint per junction required");
    }
    Eigen::VectorXd xi(dimension());
    for (int i = 0; i < junctions(); i++)
    {
        const auto &P = region(i);
        const auto &V = vertices(i);
        const Vec3 x = q.col(i);
        if (!contains(P, x, 1e-9))
        {
            throw Error(ErrorCode::NotInPolytope, "waypoint " + std::to_string(i) + " is outside its junction region");
        }
        const Eigen::Index n = V.cols();
        const Vec3 c = V.rowwise().mean();

        // blend with uniform weights as far as the region allows so that no weight vanishes
        double reach = std::numeric_limits<double>::infinity();
        const Vec3 dir = x - c;
        for (int f = 0; f < P.faceCount(); f++)
        {
            const double a = P.normals.row(f).dot(dir);
            if (a > 0.0)
                reach = std::min(reach, (P.offsets(f) - P.normals.row(f).dot(c)) / a);
        }
        const double beta = reach > 1.0 ? std::min(0.5, 0.5 * (1.0 - 1.0 / reach)) : 0.0;
        const Vec3 y = c + dir / (1.0 - beta);

        // fan tetrahedra from vertex 0 over every face not touching it
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        double best = -std::numeric_limits<double>::infinity();
        Eigen::Vector4d bestBary = Eigen::Vector4d::Zero();
        int bestIds[4] = {0, 0, 0, 0};
        for (const auto &cyc : facets_[static_cast<std::size_t>(i)])
        {
            if (std::find(cyc.begin(), cyc.end(), 0) != cyc.end())
                continue;
            for (std::size_t k = 1; k + 1 < cyc.size(); k++)
            {
                const int ids[4] = {0, cyc[0], cyc[k], cyc[k + 1]};
                Eigen::Matrix3d A;
                for (int r = 0; r < 3; r++)
                    A.col(r) = V.col(ids[r + 1]) - V.col(0);
                const auto lu = A.fullPivLu();
                if (!lu.isInvertible())
                    continue;
                const Vec3 l = lu.solve(y - V.col(0));
                const Eigen::Vector4d bary(1.0 - l.sum(), l(0), l(1), l(2));
                if (bary.minCoeff() > best)
                {
                    best = bary.minCoeff();
                    bestBary = bary;
                    std::copy(ids, ids + 4, bestIds);
                }
            }
        }
        if (best < -1e-6)
        {
            throw Error(ErrorCode::NotInPolytope, "waypoint " + std::to_string(i) + " could not be decomposed");
        }
        bestBary = bestBary.cwiseMax(0.0);
        bestBary /= bestBary.sum();
        for (int r = 0; r < 4; r++)
            w(bestIds[r]) += (1.0 - beta) * bestBary(r);
        w.array() += beta / static_cast<double>(n);
        xi.segment(offset(i), n) = w.array().sqrt().matrix();
    }
    return xi;
}

} // namespace swarmtraj
