#pragma once

#include "swarmtraj/common.hpp"

#include <numbers>
#include <span>
#include <vector>

namespace swarmtraj
{

struct VehicleModel
{
    double mass = 1.9;
    double gravity = 9.81;
    double dragH = 0.475;
    double dragV = 0.475;
    double parasitic = 0.01; // C_p, multiplies speed in sigma = 1 + C_p |v|
    double eta = 1e-8;       // speed smoothing

    // sigma evaluated on the smoothed speed sqrt(|v|^2 + eta)
    double sigma(const Vec3 &vel) const;
    void validate() const;
};

struct Limits
{
    double vMax = 13.0;
    double omegaMax = 2.0 * std::numbers::pi / 3.0;
    double thetaMax = std::numbers::pi / 9.0;
    double fMin = 9.5;
    double fMax = 28.5;

    double fMid() const { return 0.5 * (fMax + fMin); }
    double fRad() const { return 0.5 * (fMax - fMin); }
    // Positivity, ordering and the thrust guard against the free-fall singularity.
    void validate(const VehicleModel &model) const;
};

struct FlatPoint
{
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Vec3 acc = Vec3::Zero();
    Vec3 jerk = Vec3::Zero();
    double yaw = 0.0;
    double yawRate = 0.0;
};

struct StateInput
{
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Mat3 R = Mat3::Identity();
    Eigen::Vector4d quat = Eigen::Vector4d(1, 0, 0, 0); // w, x, y, z
    double thrust = 0.0;
    Vec3 omega = Vec3::Zero();
    Vec3 zb = Vec3::UnitZ();
    Vec3 drag = Vec3::Zero();
    Vec3 zbDot = Vec3::Zero();
};

// Flatness map with lumped rotor/parasitic drag and Hopf-fibration attitude.
StateInput flatnessMap(const VehicleModel &model, const FlatPoint &p);

struct FlatGradient
{
    Vec3 vel = Vec3::Zero();
    Vec3 acc = Vec3::Zero();
    Vec3 jerk = Vec3::Zero();
    double yaw = 0.0;
    double yawRate = 0.0;
};

// Reverse-mode pullback of gradients on (thrust, omega, z_b) to the flat outputs.
FlatGradient flatnessBackward(const VehicleModel &model, const FlatPoint &p, const StateInput &s, double gradThrust,
                              const Vec3 &gradOmega, const Vec3 &gradZb);

// Rows: thrust, omega (3), z_b (3), speed. Columns: vel, acc, jerk, yaw, yaw rate.
Eigen::Matrix<double, 8, 11> flatnessJacobian(const VehicleModel &model, const FlatPoint &p);

// G = (|v|^2 - vmax^2, |w|^2 - wmax^2, cos(theta_max) - z_b3, (f - f_m)^2 - f_r^2)
Eigen::Vector4d limitsResidual(const Limits &limits, const StateInput &s);
// Same entries divided by vmax^2, wmax^2, 1 and f_r^2.
Eigen::Vector4d normalizedResidual(const Limits &limits, const StateInput &s);

Mat3 quaternionToRotation(const Eigen::Vector4d &q);
Eigen::Vector4d quaternionProduct(const Eigen::Vector4d &a, const Eigen::Vector4d &b);

struct RigidState
{
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Mat3 R = Mat3::Identity();
};

struct InputSample
{
    double thrust = 0.0;
    Vec3 omega = Vec3::Zero();
};

// RK4 over uniformly spaced input samples; inputs are linearly interpolated for the
// midpoint stages and R is re-orthonormalized after each step. Returns one state per sample.
std::vector<RigidState> integrateDynamics(const VehicleModel &model, const RigidState &x0,
                                          std::span<const InputSample> inputs, double dt);

} // namespace swarmtraj
