#include "swarmtraj/pathfind.hpp"
#include "swarmtraj/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace swarmtraj
{

Path::Path(std::vector<Vec3> points) : points_(std::move(points))
{
    cumulative_.reserve(points_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < points_.size(); i++)
    {
        if (i > 0)
            acc += (points_[i] - points_[i - 1]).norm();
        cumulative_.push_back(acc);
    }
}

Vec3 Path::at(double l) const
{
    if (points_.empty())
    {
        throw Error(ErrorCode::InvalidArgument, "empty path");
    }
    if (l <= 0.0 || points_.size() == 1)
        return points_.front();
    if (l >= length())
        return points_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), l);
    const std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
    const double seg = cumulative_[k] - cumulative_[k - 1];
    const double s = seg > 0.0 ? (l - cumulative_[k - 1]) / seg : 0.0;
    return points_[k - 1] + s * (points_[k] - points_[k - 1]);
}

void RrtConfig::validate() const
{
    if (!(step > 0.0) || !(goalBias >= 0.0 && goalBias < 1.0) || iterations < 1 || informedIterations < 0)
    {
        throw Error(ErrorCode::InvalidConfig, "invalid RRT* settings");
    }
}

namespace
{

struct Node
{
    Vec3 x;
    int parent = -1;
    double cost = 0.0;
    std::vector<int> children;
};

struct CellKey
{
    long long i, j, k;
    bool operator==(const CellKey &) const = default;
};

struct CellHash
{
    std::size_t operator()(const CellKey &c) const
    {
        return static_cast<std::size_t>(c.i * 73856093LL ^ c.j * 19349663LL ^ c.k * 83492791LL);
    }
};

class NodeGrid
{
public:
    explicit NodeGrid(double cell) : cell_(cell) {}

    void insert(const Vec3 &x, int id) { cells_[key(x)].push_back(id); }

    void near(const std::vector<Node> &nodes, const Vec3 &x, double r, std::vector<int> &out) const
    {
        out.clear();
        const int reach = static_cast<int>(std::ceil(r / cell_));
        const CellKey c = key(x);
        for (long long i = c.i - reach; i <= c.i + reach; i++)
            for (long long j = c.j - reach; j <= c.j + reach; j++)
                for (long long k = c.k - reach; k <= c.k + reach; k++)
                {
                    const auto it = cells_.find({i, j, k});
                    if (it == cells_.end())
                        continue;
                    for (int id : it->second)
                        if ((nodes[static_cast<std::size_t>(id)].x - x).squaredNorm() <= r * r)
                            out.push_back(id);
                }
    }

    int nearest(const std::vector<Node> &nodes, const Vec3 &x) const
    {
        const CellKey c = key(x);
        int best = -1;
        double bestD = std::numeric_limits<double>::infinity();
        for (int ring = 0;; ring++)
        {
            for (long long i = c.i - ring; i <= c.i + ring; i++)
                for (long long j = c.j - ring; j <= c.j + ring; j++)
                    for (long long k = c.k - ring; k <= c.k + ring; k++)
                    {
                        if (std::max({std::abs(i - c.i), std::abs(j - c.j), std::abs(k - c.k)}) != ring)
                            continue;
                        const auto it = cells_.find({i, j, k});
                        if (it == cells_.end())
                            continue;
                        for (int id : it->second)
                        {
                            const double d = (nodes[static_cast<std::size_t>(id)].x - x).squaredNorm();
                            if (d < bestD)
                            {
                                bestD = d;
                                best = id;
                            }
                        }
                    }
            // every unvisited cell is at least ring * cell away
            if (best >= 0 && std::sqrt(bestD) <= ring * cell_)
                return best;
            if (ring > 1 && static_cast<std::size_t>(ring * ring) > 4 * cells_.size() + 64)
            {
                // sparse tree far away: fall back to a scan
                for (std::size_t id = 0; id < nodes.size(); id++)
                {
                    const double d = (nodes[id].x - x).squaredNorm();
                    if (d < bestD)
                    {
                        bestD = d;
                        best = static_cast<int>(id);
                    }
                }
                return best;
            }
        }
    }

private:
    CellKey key(const Vec3 &x) const
    {
        return {static_cast<long long>(std::floor(x(0) / cell_)), static_cast<long long>(std::floor(x(1) / cell_)),
                static_cast<long long>(std::floor(x(2) / cell_))};
    }

    double cell_;
    std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

void propagateCost(std::vector<Node> &nodes, int root)
{
    std::vector<int> stack{root};
    while (!stack.empty())
    {
        const int n = stack.back();
        stack.pop_back();
        for (int c : nodes[static_cast<std::size_t>(n)].children)
        {
            auto &child = nodes[static_cast<std::size_t>(c)];
            child.cost = nodes[static_cast<std::size_t>(n)].cost + (child.x - nodes[static_cast<std::size_t>(n)].x).norm();
            stack.push_back(c);
        }
    }
}

void reparent(std::vector<Node> &nodes, int child, int parent)
{
    auto &c = nodes[static_cast<std::size_t>(child)];
    if (c.parent >= 0)
    {
        auto &sib = nodes[static_cast<std::size_t>(c.parent)].children;
        sib.erase(std::find(sib.begin(), sib.end(), child));
    }
    c.parent = parent;
    nodes[static_cast<std::size_t>(parent)].children.push_back(child);
    c.cost = nodes[static_cast<std::size_t>(parent)].cost + (c.x - nodes[static_cast<std::size_t>(parent)].x).norm();
    propagateCost(nodes, child);
}

} // namespace

Path shortcut(const PolyMap &map, const Path &path)
{
    const auto &p = path.points();
    if (p.size() <= 2)
        return path;
    std::vector<Vec3> out{p.front()};
    std::size_t i = 0;
    while (i + 1 < p.size())
    {
        std::size_t j = p.size() - 1;
        while (j > i + 1 && !map.segmentInside(p[i], p[j]))
            j--;
        out.push_back(p[j]);
        i = j;
    }
    return Path(std::move(out));
}

Path informedRrtStar(const PolyMap &map, const Vec3 &start, const Vec3 &goal, const RrtConfig &cfg,
                     std::mt19937_64 &rng, RrtStats *stats)
{
    cfg.validate();
    if (!map.inside(start) || !map.inside(goal))
    {
        throw Error(ErrorCode::NoPath, "start or goal is outside the covered free space");
    }
    RrtStats local;
    RrtStats &st = stats ? *stats : local;
    st = RrtStats{};
    if ((goal - start).norm() == 0.0)
        return Path({start});
    if (map.segmentInside(start, goal))
    {
        st.firstSolution = 0;
        return Path({start, goal});
    }

    const Aabb &B = map.bounds();
    const double volume = B.volume();
    const double gamma = 2.0 * std::cbrt((1.0 + 1.0 / 3.0) * volume / (4.0 / 3.0 * std::numbers::pi));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Node> nodes;
    nodes.push_back({start, -1, 0.0, {}});
    NodeGrid grid(cfg.step);
    grid.insert(start, 0);
    int goalNode = -1;

    const double cmin = (goal - start).norm();
    const Vec3 centre = 0.5 * (start + goal);
    // rotation taking e1 onto the focal axis
    Mat3 C;
    {
        const Vec3 a1 = (goal - start) / cmin;
        Vec3 t = std::abs(a1(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        const Vec3 a2 = (t - t.dot(a1) * a1).normalized();
        C.col(0) = a1;
        C.col(1) = a2;
        C.col(2) = a1.cross(a2);
    }

    auto sampleFree = [&](double cbest) -> Vec3 {
        for (int tries = 0; tries < 1000; tries++)
        {
            Vec3 x;
            if (std::isfinite(cbest))
            {
                Vec3 u(normal(rng), normal(rng), normal(rng));
                u *= std::cbrt(unit(rng)) / u.norm();
                const double r2 = 0.5 * std::sqrt(std::max(cbest * cbest - cmin * cmin, 0.0));
                x = centre + C * Vec3(0.5 * cbest * u(0), r2 * u(1), r2 * u(2));
                if (!B.contains(x))
                    continue;
            }
            else
            {
                x = B.lo + B.size().cwiseProduct(Vec3(unit(rng), unit(rng), unit(rng)));
            }
            if (map.inside(x))
                return x;
        }
        return goal;
    };

    std::vector<int> near;
    int budget = cfg.iterations;
    for (int it = 0; it < budget; it++)
    {
        st.iterations = it + 1;
        const double cbest = goalNode >= 0 ? nodes[static_cast<std::size_t>(goalNode)].cost
                                           : std::numeric_limits<double>::infinity();
        const Vec3 sample = (goalNode < 0 && unit(rng) < cfg.goalBias) ? goal : sampleFree(cbest);
        const int nearestId = grid.nearest(nodes, sample);
        const Vec3 &from = nodes[static_cast<std::size_t>(nearestId)].x;
        Vec3 x = sample;
        const double d = (sample - from).norm();
        if (d > cfg.step)
            x = from + (sample - from) * (cfg.step / d);
        if (d >= 1e-9 && map.segmentInside(from, x))
        {
            const double n = static_cast<double>(nodes.size());
            const double r = std::min(cfg.step * 1.5, gamma * std::cbrt(std::log(n + 1.0) / (n + 1.0)));
            grid.near(nodes, x, std::max(r, 1e-9), near);

            int parent = nearestId;
            double best = nodes[static_cast<std::size_t>(nearestId)].cost + (x - from).norm();
            std::vector<char> free(near.size(), 0);
            for (std::size_t k = 0; k < near.size(); k++)
            {
                const auto &nb = nodes[static_cast<std::size_t>(near[k])];
                const double c = nb.cost + (x - nb.x).norm();
                if (near[k] == nearestId)
                {
                    free[k] = 1;
                    continue;
                }
                if (c < best && map.segmentInside(nb.x, x))
                {
                    free[k] = 1;
                    best = c;
                    parent = near[k];
                }
            }
            const int id = static_cast<int>(nodes.size());
            nodes.push_back({x, -1, 0.0, {}});
            reparent(nodes, id, parent);
            grid.insert(x, id);

            for (std::size_t k = 0; k < near.size(); k++)
            {
                const int nb = near[k];
                if (nb == parent || nb == 0)
                    continue;
                const double c = nodes[static_cast<std::size_t>(id)].cost + (x - nodes[static_cast<std::size_t>(nb)].x).norm();
                if (c + 1e-12 < nodes[static_cast<std::size_t>(nb)].cost && (free[k] || map.segmentInside(x, nodes[static_cast<std::size_t>(nb)].x)))
                {
                    reparent(nodes, nb, id);
                }
            }

            // connect the goal through the new node when it is close
            if ((goal - x).norm() <= cfg.step && map.segmentInside(x, goal))
            {
                const double c = nodes[static_cast<std::size_t>(id)].cost + (goal - x).norm();
                if (goalNode < 0)
                {
                    goalNode = static_cast<int>(nodes.size());
                    nodes.push_back({goal, -1, 0.0, {}});
                    reparent(nodes, goalNode, id);
                    st.firstSolution = it;
                    budget = std::min(budget, it + 1 + cfg.informedIterations);
                }
                else if (c < nodes[static_cast<std::size_t>(goalNode)].cost)
                {
                    reparent(nodes, goalNode, id);
                }
            }
        }
        if (goalNode >= 0)
            st.bestCost.push_back(nodes[static_cast<std::size_t>(goalNode)].cost);
    }
    st.nodes = static_cast<int>(nodes.size());
    if (goalNode < 0)
    {
        throw Error(ErrorCode::NoPath, "no path found within the iteration budget");
    }
    std::vector<Vec3> pts;
    for (int n = goalNode; n >= 0; n = nodes[static_cast<std::size_t>(n)].parent)
        pts.push_back(nodes[static_cast<std::size_t>(n)].x);
    std::reverse(pts.begin(), pts.end());
    return shortcut(map, Path(std::move(pts)));
}

Corridor corridorFromPath(const PolyMap &map, const Path &path, double marchStep)
{
    if (path.points().empty() || !(marchStep > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "corridor needs a nonempty path and a positive step");
    }
    const double L = path.length();
    const auto &cum = path.cumulative();

    // largest theta with the path inside P on [l, theta]; path vertices are always probed
    auto advance = [&](int id, double l) {
        const auto &P = map.polytope(id);
        double lo = l;
        while (lo < L)
        {
            double next = std::min(lo + marchStep, L);
            const auto it = std::upper_bound(cum.begin(), cum.end(), lo + 1e-12);
            if (it != cum.end() && *it < next)
                next = *it;
            if (contains(P, path.at(next)))
            {
                lo = next;
                continue;
            }
            double hi = next;
            while (hi - lo > 1e-6)
            {
                const double mid = 0.5 * (lo + hi);
                if (contains(P, path.at(mid)))
                    lo = mid;
                else
                    hi = mid;
            }
            return lo;
        }
        return L;
    };
    // among the polytopes holding r(l), the one reaching farthest along the path
    auto pick = [&](double l, int exclude, double &reach) {
        const Vec3 x = path.at(l);
        int best = -1;
        reach = -1.0;
        double bestDepth = -1.0;
        for (int id : map.stabAll(x))
        {
            if (id == exclude || !contains(map.polytope(id), x, 1e-9))
                continue;
            const double r = advance(id, l);
            const double depth = map.polytope(id).depth(x);
            if (r > reach + 1e-9 || (std::abs(r - reach) <= 1e-9 && depth > bestDepth))
            {
                best = id;
                reach = r;
                bestDepth = depth;
            }
        }
        return best;
    };

    Corridor c;
    c.start = path.points().front();
    c.goal = path.points().back();
    double l = 0.0, reach = 0.0;
    int cur = pick(0.0, -1, reach);
    while (true)
    {
        if (cur < 0)
        {
            throw Error(ErrorCode::CoverageGap, "path leaves the covered free space at arc length " + std::to_string(l));
        }
        c.ids.push_back(cur);
        if (reach >= L)
            break;
        const double theta = reach;
        double nextReach = 0.0;
        const int next = pick(theta, cur, nextReach);
        if (next < 0 || nextReach <= theta + 1e-9)
        {
            throw Error(ErrorCode::CoverageGap,
                        "path leaves the covered free space at arc length " + std::to_string(theta));
        }
        c.switches.push_back(path.at(theta));
        l = theta;
        cur = next;
        reach = nextReach;
    }
    return c;
}

std::vector<Vec3> shortestPathRefine(const CoordinateChart &chart, const Corridor &corridor, double delta)
{
    if (!(delta > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "smoothing delta must be positive");
    }
    const int J = chart.junctions();
    if (J != corridor.size() - 1 || static_cast<int>(corridor.switches.size()) != J)
    {
        throw Error(ErrorCode::InvalidArgument, "chart does not match the corridor");
    }
    if (J == 0)
        return {};

    Eigen::Matrix3Xd q0(3, J);
    for (int i = 0; i < J; i++)
        q0.col(i) = corridor.switches[static_cast<std::size_t>(i)];
    auto chain = [&](const Eigen::Matrix3Xd &q) {
        double len = (q.col(0) - corridor.start).norm() + (corridor.goal - q.col(J - 1)).norm();
        for (int i = 1; i < J; i++)
            len += (q.col(i) - q.col(i - 1)).norm();
        return len;
    };

    auto f = [&](const Eigen::VectorXd &xi, Eigen::VectorXd &g) {
        const Eigen::Matrix3Xd q = chart.waypoints(xi);
        Eigen::Matrix3Xd gq = Eigen::Matrix3Xd::Zero(3, J);
        double val = 0.0;
        for (int i = 0; i <= J; i++)
        {
            const Vec3 a = i == 0 ? corridor.start : Vec3(q.col(i - 1));
            const Vec3 b = i == J ? corridor.goal : Vec3(q.col(i));
            const double s = std::sqrt((b - a).squaredNorm() + delta);
            val += s;
            const Vec3 d = (b - a) / s;
            if (i < J)
                gq.col(i) += d;
            if (i > 0)
                gq.col(i - 1) -= d;
        }
        g = chart.pullback(xi, gq);
        return val;
    };

    const Eigen::VectorXd xi0 = chart.invert(q0);
    Eigen::VectorXd g0;
    f(xi0, g0);
    LbfgsConfig cfg;
    cfg.gradTol = 1e-6 / std::max(1.0, g0.lpNorm<Eigen::Infinity>());
    cfg.maxIterations = 1000;
    const auto res = minimizeLbfgs(f, xi0, cfg);
    Eigen::Matrix3Xd q = chart.waypoints(res.x);
    if (chain(q) > chain(q0))
        q = q0;
    std::vector<Vec3> out;
    for (int i = 0; i < J; i++)
        out.push_back(q.col(i));
    return out;
}

double trapezoidDuration(double distance, double vMax, double aMax)
{
    if (!(vMax > 0.0) || !(aMax > 0.0) || distance < 0.0)
    {
        throw Error(ErrorCode::InvalidArgument, "trapezoid needs positive limits and a nonnegative distance");
    }
    const double dRamp = vMax * vMax / aMax; // accelerate plus decelerate
    if (distance <= dRamp)
        return 2.0 * std::sqrt(distance / aMax);
    return 2.0 * vMax / aMax + (distance - dRamp) / vMax;
}

double trapezoidTimeAt(double s, double distance, double vMax, double aMax)
{
    s = std::clamp(s, 0.0, distance);
    const double total = trapezoidDuration(distance, vMax, aMax);
    const double vPeak = std::min(vMax, std::sqrt(distance * aMax));
    const double dAcc = 0.5 * vPeak * vPeak / aMax;
    if (s <= dAcc)
        return std::sqrt(2.0 * s / aMax);
    if (s >= distance - dAcc)
        return total - std::sqrt(2.0 * std::max(distance - s, 0.0) / aMax);
    return vPeak / aMax + (s - dAcc) / vPeak;
}

Eigen::VectorXd trapezoidalAllocation(std::span<const Vec3> waypoints, double vMax, double aMax)
{
    if (waypoints.size() < 2)
    {
        throw Error(ErrorCode::InvalidArgument, "allocation needs at least two waypoints");
    }
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < waypoints.size(); i++)
        cum.push_back(cum.back() + (waypoints[i] - waypoints[i - 1]).norm());
    const double D = cum.back();
    Eigen::VectorXd T(static_cast<Eigen::Index>(waypoints.size() - 1));
    for (std::size_t i = 1; i < waypoints.size(); i++)
    {
        const double dt = trapezoidTimeAt(cum[i], D, vMax, aMax) - trapezoidTimeAt(cum[i - 1], D, vMax, aMax);
        T(static_cast<Eigen::Index>(i - 1)) = std::max(dt, 1e-2);
    }
    return T;
}

} // namespace swarmtraj
