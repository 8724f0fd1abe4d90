#include "helpers.hpp"

#include <doctest.h>

#include "swarmtraj/lbfgs.hpp"

using namespace swarmtraj;

namespace
{

double rosenbrock(const Eigen::VectorXd &x, Eigen::VectorXd &g)
{
    double f = 0.0;
    g.setZero(x.size());
    for (Eigen::Index i = 0; i + 1 < x.size(); i++)
    {
        const double a = x(i + 1) - x(i) * x(i), b = 1.0 - x(i);
        f += 100.0 * a * a + b * b;
        g(i) += -400.0 * a * x(i) - 2.0 * b;
        g(i + 1) += 200.0 * a;
    }
    return f;
}

} // namespace

TEST_CASE("rosenbrock in several dimensions")
{
    for (int n : {2, 5, 20})
    {
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(n, -1.2);
        LbfgsConfig cfg;
        cfg.gradTol = 1e-10;
        cfg.maxIterations = 2000;
        const auto r = minimizeLbfgs(rosenbrock, x0, cfg);
        CHECK(r.status == LbfgsStatus::Converged);
        CHECK((r.x.array() - 1.0).abs().maxCoeff() < 1e-6);
        for (std::size_t k = 1; k < r.trace.size(); k++)
            CHECK(r.trace[k] <= r.trace[k - 1]);
    }
}

TEST_CASE("convex quadratic reaches the exact minimizer")
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; t++)
    {
        const int n = 5 + t;
        Eigen::MatrixXd B = Eigen::MatrixXd::Random(n, n);
        const Eigen::MatrixXd A = B * B.transpose() + Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd b = Eigen::VectorXd::Random(n);
        auto f = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
            g = A * x - b;
            return 0.5 * x.dot(A * x) - b.dot(x);
        };
        LbfgsConfig cfg;
        cfg.gradTol = 1e-9;
        const auto r = minimizeLbfgs(f, Eigen::VectorXd::Zero(n), cfg);
        CHECK((r.x - A.ldlt().solve(b)).norm() < 1e-6);
    }
}

TEST_CASE("non-finite trial values are rejected")
{
    // minimum at x = 2 sits right next to a wall at x = 2.5
    auto f = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        g.resize(1);
        if (x(0) > 2.5)
            return std::numeric_limits<double>::infinity();
        g(0) = 2.0 * (x(0) - 2.0);
        return (x(0) - 2.0) * (x(0) - 2.0);
    };
    LbfgsConfig cfg;
    cfg.gradTol = 1e-10;
    const auto r = minimizeLbfgs(f, Eigen::VectorXd::Constant(1, -50.0), cfg);
    CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(std::isfinite(r.f));

    CHECK_THROWS_AS(minimizeLbfgs(f, Eigen::VectorXd::Constant(1, 3.0), cfg), Error);
}

TEST_CASE("iteration cap and stall detection")
{
    LbfgsConfig cfg;
    cfg.maxIterations = 3;
    cfg.gradTol = 1e-14;
    auto r = minimizeLbfgs(rosenbrock, Eigen::VectorXd::Constant(4, -1.2), cfg);
    CHECK(r.status == LbfgsStatus::MaxIterations);
    CHECK(r.iterations == 3);

    cfg.maxIterations = 5000;
    cfg.relCostTol = 1e-3;
    r = minimizeLbfgs(rosenbrock, Eigen::VectorXd::Constant(4, -1.2), cfg);
    CHECK(r.status != LbfgsStatus::MaxIterations);

    LbfgsConfig bad;
    bad.c2 = 1e-5;
    CHECK_THROWS_AS(bad.validate(), Error);
}
