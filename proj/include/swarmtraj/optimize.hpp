#pragma once

#include "swarmtraj/chart.hpp"
#include "swarmtraj/dynamics.hpp"
#include "swarmtraj/lbfgs.hpp"
#include "swarmtraj/minco.hpp"
#include "swarmtraj/pathfind.hpp"
#include "swarmtraj/penalty.hpp"

#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace swarmtraj
{

struct SolverConfig
{
    LbfgsConfig lbfgs{.relCostTol = 1e-12, .maxIterations = 300};
    int continuationRounds = 0; // optional mu <- mu * continuationFactor rounds
    double continuationFactor = 0.25;
    void validate() const;
};

// Everything the composite objective needs apart from the decision variables.
struct Problem
{
    const CoordinateChart *chart = nullptr;
    std::vector<const HalfspacePolytope *> corridor; // one per piece
    BoundaryState boundary;
    double startTime = 0.0;
    PenaltyConfig penalty;
    SafetyMargins margins;
    VehicleModel model;
    Limits limits;
    double yaw = 0.0;
    std::vector<const MincoTrajectory *> neighbors;
    bool capsule = true; // w_2 term on or off

    int pieces() const { return static_cast<int>(corridor.size()); }
    MincoTrajectory trajectory(const Eigen::VectorXd &x) const;
};

struct ObjectiveParts
{
    double energy = 0.0, corridor = 0.0, capsule = 0.0, limits = 0.0;
};

// x stacks xi (chart coordinates) and tau (log durations). Returns +inf on a singular attitude.
double compositeObjective(const Problem &p, const Eigen::VectorXd &x, Eigen::VectorXd &grad,
                          ObjectiveParts *parts = nullptr);

struct SolveResult
{
    MincoTrajectory trajectory;
    Eigen::VectorXd x;
    double objective = 0.0;
    ObjectiveParts parts;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    int iterations = 0;
    std::vector<double> trace;
};

SolveResult solveTrajectory(const Problem &p, const Eigen::VectorXd &x0, const SolverConfig &cfg);

// Piecewise-constant acceleration profile of arc length over absolute time.
struct ProfilePiece
{
    double t0 = 0.0, s0 = 0.0, v0 = 0.0, a = 0.0, duration = 0.0;
};

struct StampedProfile
{
    double departure = 0.0; // absolute time the vehicle leaves s = 0
    std::vector<ProfilePiece> pieces;

    double arrival() const;
    double length() const;
    double sAt(double t) const;
    double vAt(double t) const;
    // First time arc length s is reached.
    double timeAt(double s) const;
};

// Neighbor positions on a fixed time lattice, with block boxes for quick rejection.
class SpaceTimeOccupancy
{
public:
    SpaceTimeOccupancy(std::span<const MincoTrajectory *const> neighbors, const SafetyMargins &margins,
                       double resolution);
    // min over neighbors and lattice gamma in [t - 2 M_d, t + 2 M_d] of |p - r_i(gamma)|_W - 2 M_r
    double margin(const Vec3 &p, double t) const;
    bool empty() const { return tracks_.empty(); }
    double latestEnd() const { return latestEnd_; }

private:
    struct Track
    {
        long first = 0; // lattice index of samples[0]
        std::vector<Vec3> samples;
        std::vector<Aabb> blocks;
    };
    std::vector<Track> tracks_;
    SafetyMargins margins_;
    double h_ = 0.1;
    double latestEnd_ = -std::numeric_limits<double>::infinity();
};

struct ScheduleConfig
{
    int samples = 20000;
    double horizonFactor = 4.0;
    double resolutionFactor = 0.05; // lattice step as a fraction of M_d
    int parentCandidates = 4;
    double departureBias = 0.1;
    void validate() const;
};

// Lattice step as a fraction of M_d; distance-only margins (M_d = 0) measure it in seconds.
inline double latticeStep(const SafetyMargins &m, double factor)
{
    return factor * (m.temporal > 0.0 ? m.temporal : 1.0);
}

StampedProfile temporalSchedule(const Path &curve, std::span<const MincoTrajectory *const> neighbors,
                                const SafetyMargins &margins, double vMax, double aMax, double tRequest,
                                const ScheduleConfig &cfg, std::mt19937_64 &rng);

// Worst values of a dense post-hoc audit.
struct CheckReport
{
    double containment = std::numeric_limits<double>::infinity(); // >= 0 inside the union
    double criterion = std::numeric_limits<double>::infinity();   // space-time margin over all neighbors
    int worstNeighbor = -1;
    double limits = -std::numeric_limits<double>::infinity(); // largest normalized residual
    bool pass(double tol = 1e-3) const { return containment >= -tol && criterion >= -tol && limits <= tol; }
};

CheckReport checkContainment(const MincoTrajectory &traj, const PolyMap &map, double dt);
void checkNeighbors(CheckReport &rep, const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                    const SafetyMargins &margins, double resolution);
void checkLimits(CheckReport &rep, const MincoTrajectory &traj, const VehicleModel &model, const Limits &limits,
                 double yaw, double dt);

struct PlannerConfig
{
    VehicleModel model;
    Limits limits;
    SafetyMargins margins;
    PenaltyConfig penalty;
    SolverConfig solver;
    RrtConfig rrt;
    ScheduleConfig schedule;
    double aMax = -1.0; // <= 0 selects f_max / m - g
    double yaw = 0.0;
    double refineDelta = 1e-2;
    double radiusInflation = 0.01;   // relative, planning only
    double temporalInflation = 0.025; // relative, planning only
    double limitMargin = 0.01;        // relative shrink of every limit, planning only
    double corridorMargin = 0.02;     // m, corridor faces pulled inward, planning only
    double checkStep = 1e-2;          // s, dense post-check sampling
    double checkTolerance = 1e-3;
    double nodeSpacing = 1.0;          // m along the longest piece, corridor and limit nodes
    double capsuleSpacing = 0.25;      // fraction of M_r, capsule nodes
    int maxNodesPerPiece = 128;
    double scheduleDragShare = 0.5;   // part of the tilt budget left to cruise drag when scheduling
    int retries = 3;
    void validate() const;
    // Speed and acceleration of the scheduling double integrator, kept within the tilt limit.
    void scheduleDynamics(double &vMax, double &aMax) const;
    double accelLimit() const;
    SafetyMargins planningMargins() const;
    Limits planningLimits(double scale = 1.0) const; // limitMargin * scale
};

// Raises the node counts so that nodes on the longest piece lie at most the given arc
// length apart, and so that the fastest neighbor moves at most capsuleSpacing between
// window nodes; counts never drop below the configured ones.
void densifyQuadrature(PenaltyConfig &cfg, const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                       double temporal, double spacing, double capsuleSpacing, int maxNodes);

struct Mission
{
    int id = 0;
    Vec3 start = Vec3::Zero();
    Vec3 goal = Vec3::Zero();
    double requestTime = 0.0;
};

struct PlanResult
{
    MincoTrajectory trajectory;
    CheckReport report;
    bool scheduled = false; // temporal scheduling fallback used
    int corridorSize = 0;
    std::vector<std::string> log;
};

PlanResult planMission(const PolyMap &map, std::span<const MincoTrajectory *const> neighbors, const Mission &mission,
                       const PlannerConfig &cfg, std::mt19937_64 &rng);

} // namespace swarmtraj
