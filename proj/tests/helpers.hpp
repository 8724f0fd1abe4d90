#pragma once

#include "swarmtraj/geom.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testutil
{

using swarmtraj::Vec3;

inline double uniform(std::mt19937_64 &rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 uniformVec(std::mt19937_64 &rng, double lo, double hi)
{
    return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Vec3 unitVec(std::mt19937_64 &rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    return v.normalized();
}

// Random bounded polytope around `center`: random tangent planes plus an enclosing cube.
inline swarmtraj::HalfspacePolytope randomPolytope(std::mt19937_64 &rng, int faces, const Vec3 &center = Vec3::Zero())
{
    auto poly = swarmtraj::HalfspacePolytope::fromBox(swarmtraj::Aabb::around(center, 3.0));
    for (int k = 0; k < faces; k++)
    {
        const Vec3 n = unitVec(rng);
        poly.addHalfspace(n, n.dot(center) + uniform(rng, 0.8, 2.5));
    }
    poly.interior = center;
    return poly;
}

// Vertices by brute force over all plane triples.
inline std::vector<Vec3> bruteVertices(const swarmtraj::HalfspacePolytope &p, double tol = 1e-9)
{
    std::vector<Vec3> out;
    const int m = p.faceCount();
    for (int i = 0; i < m; i++)
        for (int j = i + 1; j < m; j++)
            for (int k = j + 1; k < m; k++)
            {
                Eigen::Matrix3d A;
                A.row(0) = p.normals.row(i);
                A.row(1) = p.normals.row(j);
                A.row(2) = p.normals.row(k);
                if (std::abs(A.determinant()) < 1e-9)
                    continue;
                const Vec3 x = A.fullPivLu().solve(Vec3(p.offsets(i), p.offsets(j), p.offsets(k)));
                if (!swarmtraj::contains(p, x, tol))
                    continue;
                bool dup = false;
                for (const auto &v : out)
                    dup = dup || (v - x).norm() < 1e-7;
                if (!dup)
                    out.push_back(x);
            }
    return out;
}

// Facet planes of the hull of a point set by brute force over triples.
inline swarmtraj::HalfspacePolytope bruteHull(const std::vector<Vec3> &pts)
{
    swarmtraj::HalfspacePolytope h;
    h.normals.resize(0, 3);
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++)
            for (int k = j + 1; k < n; k++)
            {
                Vec3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
                if (nrm.norm() < 1e-9)
                    continue;
                nrm.normalize();
                const double d = nrm.dot(pts[i]);
                int above = 0, below = 0;
                for (const auto &q : pts)
                {
                    const double s = nrm.dot(q) - d;
                    above += s > 1e-8;
                    below += s < -1e-8;
                }
                if (above == 0)
                    h.addHalfspace(nrm, d);
                else if (below == 0)
                    h.addHalfspace(-nrm, -d);
            }
    return h;
}

inline bool sameSet(const std::vector<Vec3> &a, const std::vector<Vec3> &b, double tol)
{
    if (a.size() != b.size())
        return false;
    for (const auto &x : a)
    {
        bool found = false;
        for (const auto &y : b)
            found = found || (x - y).norm() <= tol;
        if (!found)
            return false;
    }
    return true;
}

} // namespace testutil

#include <Eigen/Dense>
#include <functional>

namespace testutil
{

// Central finite differences with a relative step.
inline Eigen::VectorXd numericGradient(const std::function<double(const Eigen::VectorXd &)> &f, const Eigen::VectorXd &x,
                                       double relStep = 1e-6)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); i++)
    {
        const double h = relStep * std::max(1.0, std::abs(x(i)));
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Largest entrywise error, relative to the largest reference entry.
inline double relativeError(const Eigen::VectorXd &got, const Eigen::VectorXd &ref)
{
    const double scale = std::max(ref.cwiseAbs().maxCoeff(), 1e-12);
    return (got - ref).cwiseAbs().maxCoeff() / scale;
}

} // namespace testutil
