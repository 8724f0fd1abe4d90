#include "swarmtraj/dynamics.hpp"

#include <cmath>

namespace swarmtraj
{

double VehicleModel::sigma(const Vec3 &vel) const
{
    return 1.0 + parasitic * std::sqrt(vel.squaredNorm() + eta);
}

void VehicleModel::validate() const
{
    if (!(mass > 0.0) || !(gravity > 0.0) || !(dragH >= 0.0) || !(dragV >= 0.0) || !(parasitic >= 0.0) ||
        !(eta > 0.0))
    {
        throw Error(ErrorCode::InvalidConfig, "vehicle model needs m, g, eta > 0 and nonnegative drag");
    }
}

void Limits::validate(const VehicleModel &model) const
{
    if (!(vMax > 0.0) || !(omegaMax > 0.0) || !(thetaMax > 0.0) || !(fMin > 0.0) || !(fMax > fMin))
    {
        throw Error(ErrorCode::InvalidConfig, "limits must be positive with f_max > f_min");
    }
    if (!(thetaMax < std::numbers::pi))
    {
        throw Error(ErrorCode::InvalidConfig, "theta_max must be below pi");
    }
    const double sigmaMax = 1.0 + model.parasitic * vMax;
    if (!(fMin > (model.dragV - model.dragH) * sigmaMax * vMax))
    {
        throw Error(ErrorCode::InvalidConfig, "f_min violates the thrust singularity guard");
    }
}

Eigen::Vector4d quaternionProduct(const Eigen::Vector4d &a, const Eigen::Vector4d &b)
{
    return {a(0) * b(0) - a(1) * b(1) - a(2) * b(2) - a(3) * b(3),
            a(0) * b(1) + a(1) * b(0) + a(2) * b(3) - a(3) * b(2),
            a(0) * b(2) - a(1) * b(3) + a(2) * b(0) + a(3) * b(1),
            a(0) * b(3) + a(1) * b(2) - a(2) * b(1) + a(3) * b(0)};
}

Mat3 quaternionToRotation(const Eigen::Vector4d &q)
{
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Mat3 R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

StateInput flatnessMap(const VehicleModel &model, const FlatPoint &p)
{
    const double m = model.mass, g = model.gravity, k = model.dragH / m;
    const Vec3 &v = p.vel, &a = p.acc;
    const double ns = std::sqrt(v.squaredNorm() + model.eta);
    const double sig = 1.0 + model.parasitic * ns;

    const Vec3 zeta = a + k * sig * v + g * Vec3::UnitZ();
    const double n = zeta.norm();
    if (!(n >= 1e-6))
    {
        throw Error(ErrorCode::SingularAttitude, "free-fall singularity");
    }
    const Vec3 z = zeta / n;
    if (!(z(2) > -1.0 + 1e-6))
    {
        throw Error(ErrorCode::SingularAttitude, "inverted attitude singularity");
    }

    StateInput s;
    s.pos = p.pos;
    s.vel = v;
    s.zb = z;
    s.thrust = z.dot(m * a + model.dragV * sig * v + m * g * Vec3::UnitZ());

    const Vec3 zetaDot = p.jerk + k * (model.parasitic * v.dot(a) / ns * v + sig * a);
    s.zbDot = (zetaDot - z * z.dot(zetaDot)) / n;

    const double w = 1.0 + z(2);
    const double c = std::cos(p.yaw), sn = std::sin(p.yaw);
    const Vec3 &zd = s.zbDot;
    s.omega(0) = zd(0) * sn - zd(1) * c - zd(2) * (z(0) * sn - z(1) * c) / w;
    s.omega(1) = zd(0) * c + zd(1) * sn - zd(2) * (z(0) * c + z(1) * sn) / w;
    s.omega(2) = (z(1) * zd(0) - z(0) * zd(1)) / w + p.yawRate;

    const double h = 1.0 / std::sqrt(2.0 * w);
    const Eigen::Vector4d qz(w * h, -z(1) * h, z(0) * h, 0.0);
    const Eigen::Vector4d qpsi(std::cos(0.5 * p.yaw), 0.0, 0.0, std::sin(0.5 * p.yaw));
    s.quat = quaternionProduct(qz, qpsi);
    s.R = quaternionToRotation(s.quat);

    s.drag = sig * (model.dragH * v + (model.dragV - model.dragH) * z.dot(v) * z);
    return s;
}

FlatGradient flatnessBackward(const VehicleModel &model, const FlatPoint &p, const StateInput &s, double gradThrust,
                              const Vec3 &gradOmega, const Vec3 &gradZb)
{
    const double m = model.mass, g = model.gravity, k = model.dragH / m, cp = model.parasitic;
    const Vec3 &v = p.vel, &a = p.acc;
    const double ns = std::sqrt(v.squaredNorm() + model.eta);
    const double sig = 1.0 + cp * ns;
    const Vec3 zeta = a + k * sig * v + g * Vec3::UnitZ();
    const double n = zeta.norm();
    const Vec3 &z = s.zb, &zd = s.zbDot;
    const Vec3 zetaDot = p.jerk + k * (cp * v.dot(a) / ns * v + sig * a);
    const double w = 1.0 + z(2);
    const double c = std::cos(p.yaw), sn = std::sin(p.yaw);
    const double A1 = z(0) * sn - z(1) * c, A2 = z(0) * c + z(1) * sn, A3 = z(1) * zd(0) - z(0) * zd(1);
    const double g1 = gradOmega(0), g2 = gradOmega(1), g3 = gradOmega(2);

    FlatGradient out;
    out.yaw = g1 * s.omega(1) - g2 * s.omega(0);
    out.yawRate = g3;

    Vec3 gzd = g1 * Vec3(sn, -c, -A1 / w) + g2 * Vec3(c, sn, -A2 / w) + g3 * Vec3(z(1) / w, -z(0) / w, 0.0);
    Vec3 gz = g1 * Vec3(-zd(2) * sn / w, zd(2) * c / w, zd(2) * A1 / (w * w)) +
              g2 * Vec3(-zd(2) * c / w, -zd(2) * sn / w, zd(2) * A2 / (w * w)) +
              g3 * Vec3(-zd(1) / w, zd(0) / w, -A3 / (w * w));
    gz += gradZb;

    // thrust
    const Vec3 u = m * a + model.dragV * sig * v + m * g * Vec3::UnitZ();
    gz += gradThrust * u;
    const Vec3 gu = gradThrust * z;
    Vec3 ga = m * gu;
    Vec3 gv = model.dragV * sig * gu;
    double gsig = model.dragV * v.dot(gu);

    // tangent projection of zeta-dot
    const Vec3 gzetaDot = (gzd - z * z.dot(gzd)) / n;
    gz -= (z.dot(zetaDot) * gzd + z.dot(gzd) * zetaDot) / n;
    const double gn = -gzd.dot(zd) / n;

    // zeta-dot
    out.jerk = gzetaDot;
    const double vg = v.dot(gzetaDot), pa = v.dot(a);
    ga += k * (cp / ns * vg * v + sig * gzetaDot);
    gv += k * cp * (vg / ns * a + pa / ns * gzetaDot - pa * vg / (ns * ns * ns) * v);
    gsig += k * a.dot(gzetaDot);

    // normalization
    const Vec3 gzeta = (gz - z * z.dot(gz)) / n + gn * z;
    ga += gzeta;
    gv += k * sig * gzeta;
    gsig += k * v.dot(gzeta);

    gv += gsig * cp / ns * v;
    out.vel = gv;
    out.acc = ga;
    return out;
}

Eigen::Matrix<double, 8, 11> flatnessJacobian(const VehicleModel &model, const FlatPoint &p)
{
    const StateInput s = flatnessMap(model, p);
    Eigen::Matrix<double, 8, 11> J = Eigen::Matrix<double, 8, 11>::Zero();
    for (int row = 0; row < 7; row++)
    {
        double gf = 0.0;
        Vec3 gw = Vec3::Zero(), gzb = Vec3::Zero();
        if (row == 0)
            gf = 1.0;
        else if (row < 4)
            gw(row - 1) = 1.0;
        else
            gzb(row - 4) = 1.0;
        const FlatGradient fg = flatnessBackward(model, p, s, gf, gw, gzb);
        J.block<1, 3>(row, 0) = fg.vel.transpose();
        J.block<1, 3>(row, 3) = fg.acc.transpose();
        J.block<1, 3>(row, 6) = fg.jerk.transpose();
        J(row, 9) = fg.yaw;
        J(row, 10) = fg.yawRate;
    }
    const double speed = p.vel.norm();
    if (speed > 0.0)
    {
        J.block<1, 3>(7, 0) = (p.vel / speed).transpose();
    }
    return J;
}

Eigen::Vector4d limitsResidual(const Limits &limits, const StateInput &s)
{
    const double df = s.thrust - limits.fMid();
    return {s.vel.squaredNorm() - limits.vMax * limits.vMax, s.omega.squaredNorm() - limits.omegaMax * limits.omegaMax,
            std::cos(limits.thetaMax) - s.zb(2), df * df - limits.fRad() * limits.fRad()};
}

Eigen::Vector4d normalizedResidual(const Limits &limits, const StateInput &s)
{
    Eigen::Vector4d G = limitsResidual(limits, s);
    G(0) /= limits.vMax * limits.vMax;
    G(1) /= limits.omegaMax * limits.omegaMax;
    G(3) /= limits.fRad() * limits.fRad();
    return G;
}

namespace
{

struct Deriv
{
    Vec3 pos, vel;
    Mat3 R;
};

Mat3 hat(const Vec3 &w)
{
    Mat3 m;
    m << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
    return m;
}

Deriv rates(const VehicleModel &model, const RigidState &x, const InputSample &u)
{
    const double speed = x.vel.norm();
    const double sig = 1.0 + model.parasitic * speed;
    const Mat3 D = Eigen::Vector3d(model.dragH, model.dragH, model.dragV).asDiagonal();
    Deriv d;
    d.pos = x.vel;
    d.vel = -model.gravity * Vec3::UnitZ() +
            (x.R * (u.thrust * Vec3::UnitZ()) - x.R * D * x.R.transpose() * (sig * x.vel)) / model.mass;
    d.R = x.R * hat(u.omega);
    return d;
}

RigidState advance(const RigidState &x, const Deriv &d, double h)
{
    return {x.pos + h * d.pos, x.vel + h * d.vel, x.R + h * d.R};
}

} // namespace

std::vector<RigidState> integrateDynamics(const VehicleModel &model, const RigidState &x0,
                                          std::span<const InputSample> inputs, double dt)
{
    std::vector<RigidState> trace;
    trace.reserve(inputs.size());
    if (inputs.empty())
    {
        return trace;
    }
    trace.push_back(x0);
    RigidState x = x0;
    for (std::size_t i = 0; i + 1 < inputs.size(); i++)
    {
        const InputSample &u0 = inputs[i], &u1 = inputs[i + 1];
        const InputSample um{0.5 * (u0.thrust + u1.thrust), 0.5 * (u0.omega + u1.omega)};
        const Deriv k1 = rates(model, x, u0);
        const Deriv k2 = rates(model, advance(x, k1, 0.5 * dt), um);
        const Deriv k3 = rates(model, advance(x, k2, 0.5 * dt), um);
        const Deriv k4 = rates(model, advance(x, k3, dt), u1);
        x.pos += dt / 6.0 * (k1.pos + 2 * k2.pos + 2 * k3.pos + k4.pos);
        x.vel += dt / 6.0 * (k1.vel + 2 * k2.vel + 2 * k3.vel + k4.vel);
        x.R += dt / 6.0 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R);
        Eigen::JacobiSVD<Mat3> svd(x.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
        x.R = svd.matrixU() * svd.matrixV().transpose();
        trace.push_back(x);
    }
    return trace;
}

} // namespace swarmtraj
