#pragma once

#include "swarmtraj/banded.hpp"
#include "swarmtraj/common.hpp"

#include <memory>

namespace swarmtraj
{

// Columns are position, velocity and acceleration.
struct BoundaryState
{
    Mat3 head = Mat3::Zero();
    Mat3 tail = Mat3::Zero();

    static BoundaryState hover(const Vec3 &from, const Vec3 &to);
};

// Minimum-jerk piecewise quintic through fixed waypoints. Coefficients are stored
// with row 6i+j holding the t^j coefficient of piece i in local time.
class MincoTrajectory
{
public:
    static constexpr int kOrder = 6;

    MincoTrajectory() = default;

    static MincoTrajectory construct(const Eigen::Matrix3Xd &waypoints, const Eigen::VectorXd &durations,
                                     const BoundaryState &boundary, double t0);
    // Wraps precomputed coefficients, e.g. from a file. Gradient propagation is unavailable.
    static MincoTrajectory fromCoefficients(Eigen::MatrixX3d coeffs, Eigen::VectorXd durations,
                                            const BoundaryState &boundary, double t0);

    int pieces() const { return static_cast<int>(durations_.size()); }
    const Eigen::VectorXd &durations() const { return durations_; }
    const Eigen::Matrix3Xd &waypoints() const { return waypoints_; }
    const Eigen::MatrixX3d &coeffs() const { return coeffs_; }
    const BoundaryState &boundary() const { return boundary_; }
    double startTime() const { return t0_; }
    double totalDuration() const { return total_; }
    double endTime() const { return t0_ + total_; }

    // Same geometry and timing, started at a new absolute stamp.
    MincoTrajectory shifted(double newStart) const;

    // Constant extension outside [t0, tf]: endpoint position, zero derivatives.
    Vec3 eval(double tAbs, int order = 0) const;
    Vec3 evalPiece(int piece, double tLocal, int order) const;
    // Piece index and local time for an absolute stamp clamped into the domain.
    int locate(double tAbs, double &tLocal) const;
    double pieceStart(int piece) const { return t0_ + starts_(piece); }

    // Closed-form integral of squared jerk and its partials.
    double energy(Eigen::MatrixX3d *gradC = nullptr, Eigen::VectorXd *gradT = nullptr) const;

    struct Gradient
    {
        Eigen::Matrix3Xd waypoints;
        Eigen::VectorXd durations;
    };
    // Pulls partials of a functional K(c, T) back to (q, T) through the construction.
    Gradient propagate(const Eigen::MatrixX3d &gradC, const Eigen::VectorXd &gradT) const;

private:
    Eigen::Matrix3Xd waypoints_;
    Eigen::VectorXd durations_;
    Eigen::VectorXd starts_;
    Eigen::MatrixX3d coeffs_;
    BoundaryState boundary_;
    double t0_ = 0.0;
    double total_ = 0.0;
    std::shared_ptr<const BandedMatrix> lu_;
};

// Derivative of t^j of the given order, i.e. j!/(j-order)! t^(j-order).
double monomialDerivative(int j, int order, double t);

} // namespace swarmtraj
