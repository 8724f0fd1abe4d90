#pragma once

#include "swarmtraj/chart.hpp"
#include "swarmtraj/geom.hpp"

#include <random>
#include <span>
#include <vector>

namespace swarmtraj
{

// Polyline with an arc-length parameterization.
class Path
{
public:
    Path() = default;
    explicit Path(std::vector<Vec3> points);

    const std::vector<Vec3> &points() const { return points_; }
    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    const std::vector<double> &cumulative() const { return cumulative_; }
    Vec3 at(double l) const;

private:
    std::vector<Vec3> points_;
    std::vector<double> cumulative_;
};

struct RrtConfig
{
    double step = 5.0;
    double goalBias = 0.05;
    int iterations = 20000;        // budget for the first solution
    int informedIterations = 5000; // spent after it
    void validate() const;
};

struct RrtStats
{
    int iterations = 0;
    int nodes = 0;
    int firstSolution = -1;
    std::vector<double> bestCost; // one entry per iteration after the first solution
};

Path informedRrtStar(const PolyMap &map, const Vec3 &start, const Vec3 &goal, const RrtConfig &cfg,
                     std::mt19937_64 &rng, RrtStats *stats = nullptr);

// Greedy edge skipping.
Path shortcut(const PolyMap &map, const Path &path);

struct Corridor
{
    std::vector<int> ids;
    Vec3 start = Vec3::Zero();
    Vec3 goal = Vec3::Zero();
    std::vector<Vec3> switches; // switches[k] lies in ids[k] and ids[k+1]

    int size() const { return static_cast<int>(ids.size()); }
};

Corridor corridorFromPath(const PolyMap &map, const Path &path, double marchStep = 0.1);

// Smoothed shortest chain through the junction regions. Never longer than the
// chain through the corridor switch points it starts from.
std::vector<Vec3> shortestPathRefine(const CoordinateChart &chart, const Corridor &corridor, double delta = 1e-2);

// Rest-to-rest trapezoidal speed profile over the chained length.
double trapezoidDuration(double distance, double vMax, double aMax);
double trapezoidTimeAt(double s, double distance, double vMax, double aMax);
Eigen::VectorXd trapezoidalAllocation(std::span<const Vec3> waypoints, double vMax, double aMax);

} // namespace swarmtraj
