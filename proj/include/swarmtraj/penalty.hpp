#pragma once

#include "swarmtraj/dynamics.hpp"
#include "swarmtraj/geom.hpp"
#include "swarmtraj/minco.hpp"

#include <limits>
#include <span>
#include <vector>

namespace swarmtraj
{

// C2 smoothing of max(x, 0) with width mu; writes the first derivative when asked.
double phi(double mu, double x, double *derivative = nullptr);

struct PenaltyConfig
{
    double mu = 1e-2;
    double wCorridor = 1e5;
    double wCapsule = 1e5;
    double wLimits = 1e5;
    double rho = 1e-3;
    int nodesPerPiece = 16;    // corridor and limit quadrature
    int capsuleNodesT = 8;     // per piece
    int capsuleNodesV = 16;    // over the temporal window
    void validate() const;
};

struct SafetyMargins
{
    double radius = 15.0;  // M_r
    double temporal = 4.0; // M_d
    double vertical = 1.0; // w in W = diag(1, 1, w)

    Vec3 weights() const { return {1.0, 1.0, vertical}; }
    double weightedNorm(const Vec3 &d) const { return std::sqrt(d.dot(weights().cwiseProduct(d))); }
    void validate() const;
};

struct PenaltyTerm
{
    double value = 0.0;
    Eigen::MatrixX3d gradC;
    Eigen::VectorXd gradT;

    void resize(int pieces);
    void accumulate(const PenaltyTerm &o, double weight);
};

// I0: squared jerk integral plus rho times total duration.
PenaltyTerm objectiveTerm(const MincoTrajectory &traj, const PenaltyConfig &cfg);

// I1: one polytope per piece, in piece order.
PenaltyTerm corridorPenalty(const MincoTrajectory &traj, std::span<const HalfspacePolytope *const> polytopes,
                            const PenaltyConfig &cfg);

// I2 against neighbors that are fixed and stamped on the same clock.
PenaltyTerm capsulePenalty(const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                           const SafetyMargins &margins, const PenaltyConfig &cfg);

// I3 with a constant yaw.
PenaltyTerm limitsPenalty(const MincoTrajectory &traj, const VehicleModel &model, const Limits &limits, double yaw,
                          const PenaltyConfig &cfg);

// Enclosing box of the whole trajectory, including its hover extension, from the
// Bernstein control points of every piece.
Aabb trajectoryBox(const MincoTrajectory &traj);

struct CriterionReport
{
    bool satisfied = true;
    double worstMargin = std::numeric_limits<double>::infinity();
    double worstT = 0.0;
    double worstGamma = 0.0;
};

// Grid check of |r(t) - r_i(gamma)|_W >= 2 M_r for gamma within 2 M_d of t, t over
// the lattice t_o + k h covering [t_o, t_f]. The verdict is the grid verdict; the
// reported margin is additionally polished by golden-section search near the worst pair.
CriterionReport checkEquivalentCriterion(const MincoTrajectory &traj, const MincoTrajectory &neighbor,
                                         const SafetyMargins &margins, double resolution);

} // namespace swarmtraj
