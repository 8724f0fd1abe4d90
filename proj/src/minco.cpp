#include "swarmtraj/minco.hpp"

#include <algorithm>
#include <cmath>

namespace swarmtraj
{

BoundaryState BoundaryState::hover(const Vec3 &from, const Vec3 &to)
{
    BoundaryState b;
    b.head.col(0) = from;
    b.tail.col(0) = to;
    return b;
}

double monomialDerivative(int j, int order, double t)
{
    if (order > j)
    {
        return 0.0;
    }
    double f = 1.0;
    for (int k = 0; k < order; k++)
    {
        f *= j - k;
    }
    return f * std::pow(t, j - order);
}

namespace
{

Eigen::VectorXd prefixStarts(const Eigen::VectorXd &T)
{
    Eigen::VectorXd s(T.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < T.size(); i++)
    {
        s(i) = acc;
        acc += T(i);
    }
    return s;
}

} // namespace

MincoTrajectory MincoTrajectory::construct(const Eigen::Matrix3Xd &waypoints, const Eigen::VectorXd &durations,
                                           const BoundaryState &boundary, double t0)
{
    const int M = static_cast<int>(durations.size());
    if (M < 1 || waypoints.cols() != M - 1)
    {
        throw Error(ErrorCode::InvalidArgument, "need M durations and M-1 waypoints");
    }
    if (!(durations.array() > 0.0).all() || !durations.allFinite())
    {
        throw Error(ErrorCode::SingularSystem, "durations must be positive");
    }

    const int n = 6 * M;
    auto A = std::make_shared<BandedMatrix>(n, 4, 2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 3);

    (*A)(0, 0) = 1.0;
    (*A)(1, 1) = 1.0;
    (*A)(2, 2) = 2.0;
    b.row(0) = boundary.head.col(0).transpose();
    b.row(1) = boundary.head.col(1).transpose();
    b.row(2) = boundary.head.col(2).transpose();

    for (int i = 1; i < M; i++)
    {
        const double T = durations(i - 1);
        const int r = 6 * i - 3;
        for (int j = 0; j < 6; j++)
        {
            (*A)(r, 6 * (i - 1) + j) = monomialDerivative(j, 0, T);
        }
        b.row(r) = waypoints.col(i - 1).transpose();
        double fact = 1.0;
        for (int k = 0; k <= 4; k++)
        {
            for (int j = k; j < 6; j++)
            {
                (*A)(r + 1 + k, 6 * (i - 1) + j) = monomialDerivative(j, k, T);
            }
            if (k > 0)
            {
                fact *= k;
            }
            (*A)(r + 1 + k, 6 * i + k) = -fact;
        }
    }

    const double T = durations(M - 1);
    for (int k = 0; k < 3; k++)
    {
        for (int j = k; j < 6; j++)
        {
            (*A)(n - 3 + k, 6 * (M - 1) + j) = monomialDerivative(j, k, T);
        }
        b.row(n - 3 + k) = boundary.tail.col(k).transpose();
    }

    if (!A->factorize())
    {
        throw Error(ErrorCode::SingularSystem, "zero pivot in the spline system");
    }
    A->solve(b);

    MincoTrajectory traj;
    traj.waypoints_ = waypoints;
    traj.durations_ = durations;
    traj.starts_ = prefixStarts(durations);
    traj.coeffs_ = b;
    traj.boundary_ = boundary;
    traj.t0_ = t0;
    traj.total_ = durations.sum();
    traj.lu_ = std::move(A);
    return traj;
}

MincoTrajectory MincoTrajectory::fromCoefficients(Eigen::MatrixX3d coeffs, Eigen::VectorXd durations,
                                                  const BoundaryState &boundary, double t0)
{
    const int M = static_cast<int>(durations.size());
    if (M < 1 || coeffs.rows() != 6 * M || !(durations.array() > 0.0).all())
    {
        throw Error(ErrorCode::InvalidArgument, "coefficient block does not match durations");
    }
    MincoTrajectory traj;
    traj.durations_ = std::move(durations);
    traj.starts_ = prefixStarts(traj.durations_);
    traj.coeffs_ = std::move(coeffs);
    traj.boundary_ = boundary;
    traj.t0_ = t0;
    traj.total_ = traj.durations_.sum();
    traj.waypoints_.resize(3, M - 1);
    for (int i = 0; i + 1 < M; i++)
    {
        traj.waypoints_.col(i) = traj.evalPiece(i, traj.durations_(i), 0);
    }
    return traj;
}

MincoTrajectory MincoTrajectory::shifted(double newStart) const
{
    MincoTrajectory out = *this;
    out.t0_ = newStart;
    return out;
}

Vec3 MincoTrajectory::evalPiece(int piece, double t, int order) const
{
    Vec3 out = Vec3::Zero();
    const int base = 6 * piece;
    // Horner on the differentiated polynomial
    for (int j = 5; j >= order; j--)
    {
        double f = 1.0;
        for (int k = 0; k < order; k++)
        {
            f *= j - k;
        }
        out = out * t + f * coeffs_.row(base + j).transpose();
    }
    return out;
}

int MincoTrajectory::locate(double tAbs, double &tLocal) const
{
    const double t = std::clamp(tAbs - t0_, 0.0, total_);
    const auto it = std::upper_bound(starts_.data(), starts_.data() + starts_.size(), t);
    int i = static_cast<int>(it - starts_.data()) - 1;
    i = std::clamp(i, 0, pieces() - 1);
    tLocal = std::min(t - starts_(i), durations_(i));
    return i;
}

Vec3 MincoTrajectory::eval(double tAbs, int order) const
{
    if (tAbs < t0_ || tAbs > t0_ + total_)
    {
        if (order > 0)
        {
            return Vec3::Zero();
        }
        return tAbs < t0_ ? evalPiece(0, 0.0, 0) : evalPiece(pieces() - 1, durations_(pieces() - 1), 0);
    }
    double tl = 0.0;
    const int i = locate(tAbs, tl);
    return evalPiece(i, tl, order);
}

double MincoTrajectory::energy(Eigen::MatrixX3d *gradC, Eigen::VectorXd *gradT) const
{
    const int M = pieces();
    if (gradC)
    {
        gradC->setZero(6 * M, 3);
    }
    if (gradT)
    {
        gradT->setZero(M);
    }
    double total = 0.0;
    for (int i = 0; i < M; i++)
    {
        const double T = durations_(i), T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T;
        const Vec3 a = coeffs_.row(6 * i + 3).transpose();
        const Vec3 b = coeffs_.row(6 * i + 4).transpose();
        const Vec3 c = coeffs_.row(6 * i + 5).transpose();
        const double aa = a.dot(a), ab = a.dot(b), ac = a.dot(c), bb = b.dot(b), bc = b.dot(c), cc = c.dot(c);
        total += 36.0 * aa * T + 144.0 * ab * T2 + (192.0 * bb + 240.0 * ac) * T3 + 720.0 * bc * T4 + 720.0 * cc * T5;
        if (gradC)
        {
            gradC->row(6 * i + 3) = (72.0 * T * a + 144.0 * T2 * b + 240.0 * T3 * c).transpose();
            gradC->row(6 * i + 4) = (144.0 * T2 * a + 384.0 * T3 * b + 720.0 * T4 * c).transpose();
            gradC->row(6 * i + 5) = (240.0 * T3 * a + 720.0 * T4 * b + 1440.0 * T5 * c).transpose();
        }
        if (gradT)
        {
            (*gradT)(i) = 36.0 * aa + 288.0 * ab * T + 3.0 * (192.0 * bb + 240.0 * ac) * T2 + 2880.0 * bc * T3 +
                          3600.0 * cc * T4;
        }
    }
    return total;
}

MincoTrajectory::Gradient MincoTrajectory::propagate(const Eigen::MatrixX3d &gradC, const Eigen::VectorXd &gradT) const
{
    if (!lu_)
    {
        throw Error(ErrorCode::InvalidArgument, "trajectory was not constructed from waypoints");
    }
    const int M = pieces();
    Eigen::MatrixXd G = gradC;
    lu_->solveTransposed(G);

    Gradient out;
    out.waypoints.resize(3, M - 1);
    out.durations = gradT;
    for (int i = 1; i < M; i++)
    {
        const int r = 6 * i - 3;
        out.waypoints.col(i - 1) = G.row(r).transpose();
        // rows r..r+5 read piece i-1 at its end: position, then derivatives 0..4
        double dT = G.row(r).dot(evalPiece(i - 1, durations_(i - 1), 1).transpose());
        for (int k = 0; k <= 4; k++)
        {
            dT += G.row(r + 1 + k).dot(evalPiece(i - 1, durations_(i - 1), k + 1).transpose());
        }
        out.durations(i - 1) -= dT;
    }
    const int n = 6 * M;
    double dT = 0.0;
    for (int k = 0; k < 3; k++)
    {
        dT += G.row(n - 3 + k).dot(evalPiece(M - 1, durations_(M - 1), k + 1).transpose());
    }
    out.durations(M - 1) -= dT;
    return out;
}

} // namespace swarmtraj
