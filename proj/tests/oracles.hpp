#pragma once

#include "swarmtraj/dynamics.hpp"
#include "swarmtraj/geom.hpp"
#include "swarmtraj/minco.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace oracle
{

// Minimum-jerk energy by a dense QP over the free velocity and acceleration of
// every interior joint, pieces written as quintic Hermite interpolants.
struct DenseMinJerk
{
    double energy = 0.0;
    Eigen::MatrixX3d coeffs;
};

inline Eigen::Matrix<double, 6, 6> hermiteSystem(double T)
{
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    for (int j = 0; j < 6; j++)
    {
        for (int k = 0; k < 3; k++)
        {
            H(k, j) = swarmtraj::monomialDerivative(j, k, 0.0);
            H(3 + k, j) = swarmtraj::monomialDerivative(j, k, T);
        }
    }
    return H;
}

// Gram matrix of third derivatives of the monomials on [0, T].
inline Eigen::Matrix<double, 6, 6> jerkGram(double T)
{
    Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
    for (int j = 3; j < 6; j++)
        for (int k = 3; k < 6; k++)
        {
            const double cj = j * (j - 1.0) * (j - 2.0), ck = k * (k - 1.0) * (k - 2.0);
            const int p = j + k - 5;
            Q(j, k) = cj * ck * std::pow(T, p) / p;
        }
    return Q;
}

inline DenseMinJerk denseMinJerk(const Eigen::Matrix3Xd &q, const Eigen::VectorXd &T,
                                 const swarmtraj::BoundaryState &bd)
{
    const int M = static_cast<int>(T.size());
    const int nz = 2 * (M - 1);
    DenseMinJerk out;
    out.coeffs.setZero(6 * M, 3);
    for (int axis = 0; axis < 3; axis++)
    {
        // endpoint data of piece i = S_i z + e_i
        std::vector<Eigen::MatrixXd> S(M);
        std::vector<Eigen::VectorXd> e(M);
        for (int i = 0; i < M; i++)
        {
            S[i] = Eigen::MatrixXd::Zero(6, nz);
            e[i] = Eigen::VectorXd::Zero(6);
            for (int side = 0; side < 2; side++)
            {
                const int joint = i + side;
                if (joint == 0)
                {
                    for (int k = 0; k < 3; k++)
                        e[i](k) = bd.head(axis, k);
                }
                else if (joint == M)
                {
                    for (int k = 0; k < 3; k++)
                        e[i](3 + k) = bd.tail(axis, k);
                }
                else
                {
                    e[i](3 * side) = q(axis, joint - 1);
                    S[i](3 * side + 1, 2 * (joint - 1)) = 1.0;
                    S[i](3 * side + 2, 2 * (joint - 1) + 1) = 1.0;
                }
            }
        }
        Eigen::MatrixXd Hz = Eigen::MatrixXd::Zero(nz, nz);
        Eigen::VectorXd gz = Eigen::VectorXd::Zero(nz);
        std::vector<Eigen::MatrixXd> B(M);
        std::vector<Eigen::VectorXd> d(M);
        for (int i = 0; i < M; i++)
        {
            const Eigen::MatrixXd Hinv = hermiteSystem(T(i)).inverse();
            B[i] = Hinv * S[i];
            d[i] = Hinv * e[i];
            const auto Q = jerkGram(T(i));
            Hz += B[i].transpose() * Q * B[i];
            gz += B[i].transpose() * Q * d[i];
        }
        Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
        if (nz > 0)
            z = -Hz.fullPivLu().solve(gz);
        for (int i = 0; i < M; i++)
        {
            const Eigen::VectorXd c = B[i] * z + d[i];
            out.coeffs.block(6 * i, axis, 6, 1) = c;
            out.energy += c.dot(jerkGram(T(i)) * c);
        }
    }
    return out;
}

} // namespace oracle

namespace oracle
{

// Smooth closed-form test curve with moderate speeds, tilt and yaw motion.
struct LissajousCurve
{
    swarmtraj::FlatPoint at(double t) const
    {
        swarmtraj::FlatPoint p;
        const double w[3] = {0.8, 0.5, 1.1};
        const double A[3] = {3.0, 2.0, 0.5};
        for (int d = 0; d < 3; d++)
        {
            const double s = std::sin(w[d] * t), c = std::cos(w[d] * t);
            // d = 1 uses cosine so every axis starts with nonzero phase content
            if (d == 1)
            {
                p.pos(d) = A[d] * c;
                p.vel(d) = -A[d] * w[d] * s;
                p.acc(d) = -A[d] * w[d] * w[d] * c;
                p.jerk(d) = A[d] * w[d] * w[d] * w[d] * s;
            }
            else
            {
                p.pos(d) = A[d] * s;
                p.vel(d) = A[d] * w[d] * c;
                p.acc(d) = -A[d] * w[d] * w[d] * s;
                p.jerk(d) = -A[d] * w[d] * w[d] * w[d] * c;
            }
        }
        p.yaw = 0.3 * std::sin(0.4 * t);
        p.yawRate = 0.12 * std::cos(0.4 * t);
        return p;
    }
};

// Original separation criterion by a triple loop: for every lattice time t, every own
// sample alpha and neighbor sample beta within M_d of t must be 2 M_r apart. Own samples
// live on [t_o, t_f]; t ranges wide enough that every admissible pair is visited.
inline bool originalCriterion(const swarmtraj::MincoTrajectory &a, const swarmtraj::MincoTrajectory &b, double radius,
                              double temporal, double vertical, double h)
{
    const double t0 = a.startTime(), tf = a.endTime();
    const int K = static_cast<int>(std::ceil((tf - t0) / h - 1e-9));
    const int D = static_cast<int>(std::ceil(temporal / h - 1e-9));
    auto wdist = [&](const swarmtraj::Vec3 &d) { return std::sqrt(d(0) * d(0) + d(1) * d(1) + vertical * d(2) * d(2)); };
    auto at = [&](int i) { return t0 + i * h; };
    for (int it = -D; it <= K + D; it++)
    {
        for (int ia = 0; ia <= K; ia++)
        {
            if (std::abs(at(ia) - at(it)) > temporal + 1e-9 * h)
                continue;
            const swarmtraj::Vec3 ra = a.eval(std::min(at(ia), tf), 0);
            for (int ib = it - D; ib <= it + D; ib++)
            {
                if (std::abs(at(ib) - at(it)) > temporal + 1e-9 * h)
                    continue;
                if (wdist(ra - b.eval(at(ib), 0)) < 2.0 * radius)
                    return false;
            }
        }
    }
    return true;
}

} // namespace oracle

namespace oracle
{

// A* on a lattice of spacing h over points inside the polytope union, 26-connected.
// Returns the path length, or -1 when the goal lattice cell is unreachable.
inline double gridShortestPath(const swarmtraj::PolyMap &map, const swarmtraj::Vec3 &start, const swarmtraj::Vec3 &goal,
                               double h)
{
    const swarmtraj::Aabb &B = map.bounds();
    const Eigen::Vector3i n = ((B.hi - B.lo) / h).array().floor().cast<int>() + 1;
    auto id = [&](const Eigen::Vector3i &c) { return (static_cast<long>(c(2)) * n(1) + c(1)) * n(0) + c(0); };
    auto pos = [&](const Eigen::Vector3i &c) { return swarmtraj::Vec3(B.lo + h * c.cast<double>()); };
    auto cellOf = [&](const swarmtraj::Vec3 &x) {
        return Eigen::Vector3i(((x - B.lo) / h).array().round().cast<int>()).cwiseMax(0).cwiseMin(n - Eigen::Vector3i::Ones()).eval();
    };
    const long total = static_cast<long>(n(0)) * n(1) * n(2);
    std::vector<signed char> inside(static_cast<std::size_t>(total), -1);
    auto free = [&](const Eigen::Vector3i &c) {
        auto &v = inside[static_cast<std::size_t>(id(c))];
        if (v < 0)
            v = map.inside(pos(c)) ? 1 : 0;
        return v == 1;
    };
    const Eigen::Vector3i s = cellOf(start), g = cellOf(goal);
    std::vector<double> dist(static_cast<std::size_t>(total), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, long>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[static_cast<std::size_t>(id(s))] = 0.0;
    open.push({(pos(g) - pos(s)).norm(), id(s)});
    while (!open.empty())
    {
        const auto [f, cur] = open.top();
        open.pop();
        const Eigen::Vector3i c(static_cast<int>(cur % n(0)), static_cast<int>((cur / n(0)) % n(1)),
                                static_cast<int>(cur / (static_cast<long>(n(0)) * n(1))));
        const double dc = dist[static_cast<std::size_t>(cur)];
        if (f > dc + (pos(g) - pos(c)).norm() + 1e-12)
            continue;
        if (c == g)
            return dc + (start - pos(s)).norm() + (goal - pos(g)).norm();
        for (int dz = -1; dz <= 1; dz++)
            for (int dy = -1; dy <= 1; dy++)
                for (int dx = -1; dx <= 1; dx++)
                {
                    const Eigen::Vector3i nb = c + Eigen::Vector3i(dx, dy, dz);
                    if ((nb.array() < 0).any() || (nb.array() >= n.array()).any() || nb == c || !free(nb))
                        continue;
                    const double nd = dc + h * std::sqrt(double(dx * dx + dy * dy + dz * dz));
                    auto &slot = dist[static_cast<std::size_t>(id(nb))];
                    if (nd < slot)
                    {
                        slot = nd;
                        open.push({nd + (pos(g) - pos(nb)).norm(), id(nb)});
                    }
                }
    }
    return -1.0;
}

} // namespace oracle
