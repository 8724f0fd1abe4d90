#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace swarmtraj
{

struct LbfgsConfig
{
    int memory = 8;
    double c1 = 1e-4;
    double c2 = 0.9;
    double gradTol = 1e-5;   // on the inf-norm, relative to max(1, |g0|_inf)
    double relCostTol = 0.0; // stop when f decreased by less than this fraction over `past` iterations
    int past = 3;
    int maxIterations = 500;
    int maxLineSearch = 40;
    double maxStep = 1e20;
    void validate() const;
};

enum class LbfgsStatus
{
    Converged,
    CostStalled,
    MaxIterations,
    LineSearchFailure
};

const char *lbfgsStatusName(LbfgsStatus s);

struct LbfgsResult
{
    Eigen::VectorXd x;
    double f = 0.0;
    double gradInf = 0.0;
    int iterations = 0;
    int evaluations = 0;
    LbfgsStatus status = LbfgsStatus::MaxIterations;
    std::vector<double> trace; // objective after every accepted iteration
};

// Returns f(x) and writes its gradient. A non-finite value rejects the trial point.
using Objective = std::function<double(const Eigen::VectorXd &x, Eigen::VectorXd &grad)>;

LbfgsResult minimizeLbfgs(const Objective &f, Eigen::VectorXd x0, const LbfgsConfig &cfg = {});

} // namespace swarmtraj
