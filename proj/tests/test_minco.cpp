#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include "swarmtraj/banded.hpp"
#include "swarmtraj/minco.hpp"

using namespace swarmtraj;
using testutil::uniform;
using testutil::uniformVec;

namespace
{

struct Instance
{
    Eigen::Matrix3Xd q;
    Eigen::VectorXd T;
    BoundaryState bd;
};

Instance randomInstance(std::mt19937_64 &rng, int M)
{
    Instance in;
    in.q.resize(3, M - 1);
    for (int i = 0; i < M - 1; i++)
        in.q.col(i) = uniformVec(rng, -10, 10);
    in.T.resize(M);
    for (int i = 0; i < M; i++)
        in.T(i) = uniform(rng, 0.3, 3.0);
    in.bd.head.col(0) = uniformVec(rng, -10, 10);
    in.bd.head.col(1) = uniformVec(rng, -2, 2);
    in.bd.head.col(2) = uniformVec(rng, -1, 1);
    in.bd.tail.col(0) = uniformVec(rng, -10, 10);
    in.bd.tail.col(1) = uniformVec(rng, -2, 2);
    in.bd.tail.col(2) = uniformVec(rng, -1, 1);
    return in;
}

} // namespace

TEST_CASE("banded LU agrees with a dense solve")
{
    std::mt19937_64 rng(4);
    for (int t = 0; t < 30; t++)
    {
        const int n = 5 + t, kl = 1 + t % 4, ku = 1 + t % 3;
        BandedMatrix A(n, kl, ku);
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; i++)
            for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); j++)
            {
                // weak diagonal forces pivoting
                const double v = uniform(rng, -1, 1) * (i == j ? 1e-3 : 1.0);
                A(i, j) = v;
                D(i, j) = v;
            }
        REQUIRE(A.factorize());
        Eigen::MatrixXd b = Eigen::MatrixXd::Random(n, 3), bt = b;
        const Eigen::MatrixXd x = D.fullPivLu().solve(b), xt = D.transpose().fullPivLu().solve(b);
        A.solve(b);
        A.solveTransposed(bt);
        CHECK((b - x).norm() <= 1e-8 * (1 + x.norm()));
        CHECK((bt - xt).norm() <= 1e-8 * (1 + xt.norm()));
    }
}

TEST_CASE("single rest-to-rest piece is the classic quintic")
{
    const auto traj = MincoTrajectory::construct(Eigen::Matrix3Xd(3, 0), Eigen::VectorXd::Ones(1),
                                                 BoundaryState::hover(Vec3::Zero(), Vec3(1, 0, 0)), 0.0);
    Eigen::Matrix<double, 6, 1> expect;
    expect << 0, 0, 0, 10, -15, 6;
    CHECK((traj.coeffs().col(0) - expect).norm() < 1e-12);
    CHECK(traj.coeffs().rightCols(2).norm() < 1e-12);
    CHECK(traj.energy() == doctest::Approx(720.0).epsilon(1e-12));

    // trapezoid quadrature of the squared jerk
    const int n = 10000;
    double quad = 0.0;
    for (int k = 0; k <= n; k++)
    {
        const double t = static_cast<double>(k) / n;
        quad += (k == 0 || k == n ? 0.5 : 1.0) * traj.eval(t, 3).squaredNorm() / n;
    }
    CHECK(quad == doctest::Approx(720.0).epsilon(1e-6));
}

TEST_CASE("collinear waypoints keep the orthogonal axes at zero")
{
    Eigen::Matrix3Xd q(3, 1);
    q << 1, 0, 0;
    const auto traj = MincoTrajectory::construct(q, Eigen::Vector2d(1.3, 0.7), BoundaryState::hover(Vec3::Zero(), Vec3(2, 0, 0)), 0);
    CHECK(traj.coeffs().rightCols(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("energy matches the dense QP oracle; interpolation and C4 continuity")
{
    std::mt19937_64 rng(12);
    for (int t = 0; t < 50; t++)
    {
        const auto in = randomInstance(rng, 1 + t % 5);
        const auto traj = MincoTrajectory::construct(in.q, in.T, in.bd, 2.5);
        const auto ref = oracle::denseMinJerk(in.q, in.T, in.bd);
        REQUIRE(std::abs(traj.energy() - ref.energy) <= 1e-6 * ref.energy);
        REQUIRE((traj.coeffs() - ref.coeffs).cwiseAbs().maxCoeff() <= 1e-6 * (1 + ref.coeffs.cwiseAbs().maxCoeff()));
        const int M = traj.pieces();
        for (int k = 0; k < 3; k++)
        {
            REQUIRE((traj.evalPiece(0, 0, k) - in.bd.head.col(k)).norm() <= 1e-9);
            REQUIRE((traj.evalPiece(M - 1, in.T(M - 1), k) - in.bd.tail.col(k)).norm() <= 1e-9);
        }
        for (int i = 0; i + 1 < M; i++)
        {
            REQUIRE((traj.evalPiece(i, in.T(i), 0) - in.q.col(i)).norm() <= 1e-9);
            for (int k = 0; k <= 4; k++)
                REQUIRE((traj.evalPiece(i, in.T(i), k) - traj.evalPiece(i + 1, 0, k)).norm() <= 1e-8);
        }
        // first-order optimality: nudging a free joint derivative never lowers energy
        if (M > 1)
        {
            for (int trial = 0; trial < 4; trial++)
            {
                Eigen::MatrixX3d c = ref.coeffs;
                const int joint = trial % (M - 1);
                const int order = 1 + trial % 2;
                const double h = 1e-3;
                // perturb joint derivative by re-solving both adjacent Hermite pieces
                for (int side = 0; side < 2; side++)
                {
                    const int piece = joint + side;
                    const double Tp = in.T(piece);
                    Eigen::Matrix<double, 6, 3> data;
                    for (int k = 0; k < 3; k++)
                    {
                        data.row(k) = traj.evalPiece(piece, 0, k).transpose();
                        data.row(3 + k) = traj.evalPiece(piece, Tp, k).transpose();
                    }
                    data(side == 0 ? 3 + order : order, 0) += h;
                    c.block(6 * piece, 0, 6, 3) = oracle::hermiteSystem(Tp).inverse() * data;
                }
                const auto pert = MincoTrajectory::fromCoefficients(c, in.T, in.bd, 0);
                REQUIRE(pert.energy() >= traj.energy() - 1e-9 * traj.energy());
            }
        }
    }
}

TEST_CASE("evaluation and constant extension")
{
    std::mt19937_64 rng(2);
    auto in = randomInstance(rng, 4);
    in.bd = BoundaryState::hover(Vec3(1, 2, 3), Vec3(-4, 5, 6));
    const auto traj = MincoTrajectory::construct(in.q, in.T, in.bd, 10.0);
    CHECK(traj.eval(10.0, 0) == Vec3(1, 2, 3));
    CHECK(traj.eval(traj.endTime() + 100, 1) == Vec3::Zero());
    CHECK(traj.eval(traj.endTime() + 100, 0).isApprox(Vec3(-4, 5, 6), 1e-12));
    CHECK(traj.eval(5.0, 0).isApprox(Vec3(1, 2, 3), 1e-12));
    for (int k = 0; k < 50; k++)
    {
        const double t = 10.0 + uniform(rng, 0.01, traj.totalDuration() - 0.01);
        for (int order = 0; order < 4; order++)
        {
            const double h = 1e-5;
            const Vec3 fd = (traj.eval(t + h, order) - traj.eval(t - h, order)) / (2 * h);
            const Vec3 an = traj.eval(t, order + 1);
            REQUIRE((fd - an).norm() <= 1e-6 * std::max(1.0, an.norm()));
        }
    }
    const auto moved = traj.shifted(20.0);
    CHECK(moved.eval(21.0, 0).isApprox(traj.eval(11.0, 0)));
}

TEST_CASE("energy gradient in coefficients and durations")
{
    std::mt19937_64 rng(8);
    const auto in = randomInstance(rng, 3);
    const auto traj = MincoTrajectory::construct(in.q, in.T, in.bd, 0);
    Eigen::MatrixX3d gc;
    Eigen::VectorXd gt;
    const double e = traj.energy(&gc, &gt);
    CHECK(e > 0);
    Eigen::MatrixX3d c2 = traj.coeffs() * 2.0;
    CHECK(MincoTrajectory::fromCoefficients(c2, in.T, in.bd, 0).energy() == doctest::Approx(4 * e));

    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(traj.coeffs().data(), traj.coeffs().size());
    auto fc = [&](const Eigen::VectorXd &x) {
        return MincoTrajectory::fromCoefficients(Eigen::Map<const Eigen::MatrixX3d>(x.data(), traj.coeffs().rows(), 3), in.T, in.bd, 0).energy();
    };
    const Eigen::VectorXd fdc = testutil::numericGradient(fc, flat);
    CHECK(testutil::relativeError(Eigen::Map<const Eigen::VectorXd>(gc.data(), gc.size()), fdc) < 1e-6);
    auto ft = [&](const Eigen::VectorXd &T) { return MincoTrajectory::fromCoefficients(traj.coeffs(), T, in.bd, 0).energy(); };
    CHECK(testutil::relativeError(gt, testutil::numericGradient(ft, in.T)) < 1e-6);

    // straight constant-velocity piece has zero jerk
    Eigen::MatrixX3d line = Eigen::MatrixX3d::Zero(6, 3);
    line.row(1) << 1, 2, 3;
    CHECK(MincoTrajectory::fromCoefficients(line, Eigen::VectorXd::Constant(1, 3.0), BoundaryState{}, 0).energy() == 0.0);
}

TEST_CASE("propagated gradients match finite differences")
{
    std::mt19937_64 rng(31);
    for (int t = 0; t < 20; t++)
    {
        const int M = 1 + t % 5;
        const auto in = randomInstance(rng, M);
        Eigen::MatrixX3d L = Eigen::MatrixX3d::Random(6 * M, 3);
        const Eigen::VectorXd wT = Eigen::VectorXd::Random(M);

        // three functionals: energy, c-squared norm plus a linear term, and a pure function of T
        for (int which = 0; which < 3; which++)
        {
            auto K = [&](const MincoTrajectory &tr, Eigen::MatrixX3d *gc, Eigen::VectorXd *gt) {
                if (which == 0)
                    return tr.energy(gc, gt);
                if (which == 1)
                {
                    if (gc)
                    {
                        *gc = 2.0 * tr.coeffs() + L;
                        gt->setZero(tr.pieces());
                    }
                    return tr.coeffs().squaredNorm() + (L.array() * tr.coeffs().array()).sum();
                }
                if (gc)
                {
                    gc->setZero(6 * tr.pieces(), 3);
                    *gt = (wT.array() * tr.durations().array().cos()).matrix();
                }
                return (wT.array() * tr.durations().array().sin()).sum();
            };
            const auto traj = MincoTrajectory::construct(in.q, in.T, in.bd, 0);
            Eigen::MatrixX3d gc;
            Eigen::VectorXd gt;
            K(traj, &gc, &gt);
            const auto g = traj.propagate(gc, gt);

            const int nq = 3 * (M - 1);
            Eigen::VectorXd x(nq + M);
            x << Eigen::Map<const Eigen::VectorXd>(in.q.data(), nq), in.T;
            auto f = [&](const Eigen::VectorXd &y) {
                const Eigen::Matrix3Xd q = Eigen::Map<const Eigen::Matrix3Xd>(y.data(), 3, M - 1);
                return K(MincoTrajectory::construct(q, y.tail(M), in.bd, 0), nullptr, nullptr);
            };
            Eigen::VectorXd an(nq + M);
            an << Eigen::Map<const Eigen::VectorXd>(g.waypoints.data(), nq), g.durations;
            REQUIRE(testutil::relativeError(an, testutil::numericGradient(f, x)) < 1e-5);
        }
    }
}

TEST_CASE("duration gradient vanishes at the energy-optimal split")
{
    Eigen::Matrix3Xd q(3, 1);
    q << 3, 1, 0;
    const auto bd = BoundaryState::hover(Vec3::Zero(), Vec3(4, 0, 0));
    const double total = 4.0;
    auto energyAt = [&](double s) {
        return MincoTrajectory::construct(q, Eigen::Vector2d(s, total - s), bd, 0).energy();
    };
    double lo = 0.2, hi = total - 0.2;
    const double phi = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 200; it++)
    {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (energyAt(a) < energyAt(b))
            hi = b;
        else
            lo = a;
    }
    const double s = 0.5 * (lo + hi);
    const auto traj = MincoTrajectory::construct(q, Eigen::Vector2d(s, total - s), bd, 0);
    Eigen::MatrixX3d gc;
    Eigen::VectorXd gt;
    traj.energy(&gc, &gt);
    const auto g = traj.propagate(gc, gt);
    CHECK(std::abs(g.durations(0) - g.durations(1)) <= 1e-6 * std::max(1.0, traj.energy()));
}
