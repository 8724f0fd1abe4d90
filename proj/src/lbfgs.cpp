#include "swarmtraj/lbfgs.hpp"
#include "swarmtraj/common.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace swarmtraj
{

void LbfgsConfig::validate() const
{
    if (memory < 1 || !(c1 > 0.0 && c1 < c2 && c2 < 1.0) || !(gradTol > 0.0) || relCostTol < 0.0 || past < 1 ||
        maxIterations < 1 || maxLineSearch < 1 || !(maxStep > 0.0))
    {
        throw Error(ErrorCode::InvalidConfig, "invalid quasi-Newton settings");
    }
}

const char *lbfgsStatusName(LbfgsStatus s)
{
    switch (s)
    {
    case LbfgsStatus::Converged:
        return "converged";
    case LbfgsStatus::CostStalled:
        return "cost_stalled";
    case LbfgsStatus::MaxIterations:
        return "max_iterations";
    case LbfgsStatus::LineSearchFailure:
        return "line_search_failure";
    }
    return "unknown";
}

namespace
{

struct Trial
{
    double a = 0.0, f = 0.0, d = 0.0;
};

// minimizer of the cubic through two points with slopes, kept inside a safeguarded interval
double interpolate(const Trial &lo, const Trial &hi)
{
    const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a);
    const double guard = 0.1 * (right - left);
    const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
    const double disc = d1 * d1 - lo.d * hi.d;
    double a = 0.5 * (left + right);
    if (disc >= 0.0 && std::isfinite(hi.f))
    {
        const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
        const double den = hi.d - lo.d + 2.0 * d2;
        if (den != 0.0)
        {
            const double c = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / den;
            if (std::isfinite(c))
                a = c;
        }
    }
    return std::clamp(a, left + guard, right - guard);
}

} // namespace

LbfgsResult minimizeLbfgs(const Objective &f, Eigen::VectorXd x0, const LbfgsConfig &cfg)
{
    cfg.validate();
    const Eigen::Index n = x0.size();
    LbfgsResult res;
    Eigen::VectorXd g(n);
    double fx = f(x0, g);
    res.evaluations = 1;
    if (!std::isfinite(fx))
    {
        throw Error(ErrorCode::InvalidArgument, "objective is not finite at the initial point");
    }
    res.x = x0;
    res.f = fx;
    res.gradInf = n ? g.lpNorm<Eigen::Infinity>() : 0.0;
    const double gtol = cfg.gradTol * std::max(1.0, res.gradInf);
    if (res.gradInf <= gtol)
    {
        res.status = LbfgsStatus::Converged;
        return res;
    }

    std::deque<Eigen::VectorXd> S, Y;
    std::deque<double> rhoHist;
    std::vector<double> fhist{fx};
    Eigen::VectorXd x = x0, d(n), xt(n), gt(n);
    std::vector<double> alpha(static_cast<std::size_t>(cfg.memory));

    for (int iter = 0; iter < cfg.maxIterations; iter++)
    {
        // two-loop recursion
        d = -g;
        const int m = static_cast<int>(S.size());
        for (int k = m - 1; k >= 0; k--)
        {
            alpha[k] = rhoHist[k] * S[k].dot(d);
            d -= alpha[k] * Y[k];
        }
        if (m > 0)
            d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
        for (int k = 0; k < m; k++)
        {
            const double beta = rhoHist[k] * Y[k].dot(d);
            d += (alpha[k] - beta) * S[k];
        }
        double slope = g.dot(d);
        if (!(slope < 0.0))
        {
            S.clear();
            Y.clear();
            rhoHist.clear();
            d = -g;
            slope = -g.squaredNorm();
        }

        // strong Wolfe search: bracketing phase followed by zoom
        const Trial zero{0.0, fx, slope};
        auto evalAt = [&](double a) {
            xt = x + a * d;
            Trial t{a, f(xt, gt), 0.0};
            res.evaluations++;
            t.d = std::isfinite(t.f) ? gt.dot(d) : 0.0;
            return t;
        };
        auto sufficient = [&](const Trial &t) { return std::isfinite(t.f) && t.f <= fx + cfg.c1 * t.a * slope; };
        auto curvature = [&](const Trial &t) { return std::abs(t.d) <= -cfg.c2 * slope; };

        double a = m == 0 ? std::min(1.0, 1.0 / d.lpNorm<Eigen::Infinity>()) : 1.0;
        Trial prev = zero, cur;
        bool found = false;
        Trial lo, hi;
        bool zoom = false;
        int evals = 0;
        while (evals < cfg.maxLineSearch)
        {
            cur = evalAt(a);
            evals++;
            if (!std::isfinite(cur.f))
            {
                // pull back towards the last good trial
                a = prev.a + 0.5 * (a - prev.a);
                continue;
            }
            if (!sufficient(cur) || (evals > 1 && cur.f >= prev.f))
            {
                lo = prev;
                hi = cur;
                zoom = true;
                break;
            }
            if (curvature(cur))
            {
                found = true;
                break;
            }
            if (cur.d >= 0.0)
            {
                lo = cur;
                hi = prev;
                zoom = true;
                break;
            }
            prev = cur;
            a = std::min(2.0 * a, cfg.maxStep);
        }
        while (zoom && !found && evals < cfg.maxLineSearch)
        {
            const double aj = interpolate(lo, hi);
            cur = evalAt(aj);
            evals++;
            if (!sufficient(cur) || cur.f >= lo.f)
            {
                hi = cur;
            }
            else
            {
                if (curvature(cur))
                {
                    found = true;
                    break;
                }
                if (cur.d * (hi.a - lo.a) >= 0.0)
                    hi = lo;
                lo = cur;
            }
            if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, lo.a))
                break;
        }
        if (!found)
        {
            // accept a decreasing point when the curvature condition could not be met
            if (zoom && lo.a > 0.0 && lo.f < fx)
            {
                cur = evalAt(lo.a);
            }
            else
            {
                res.status = LbfgsStatus::LineSearchFailure;
                break;
            }
        }

        const Eigen::VectorXd s = xt - x, y = gt - g;
        x = xt;
        g = gt;
        fx = cur.f;
        res.iterations = iter + 1;
        res.trace.push_back(fx);
        res.x = x;
        res.f = fx;
        res.gradInf = g.lpNorm<Eigen::Infinity>();

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm())
        {
            if (static_cast<int>(S.size()) == cfg.memory)
            {
                S.pop_front();
                Y.pop_front();
                rhoHist.pop_front();
            }
            S.push_back(s);
            Y.push_back(y);
            rhoHist.push_back(1.0 / sy);
        }

        if (res.gradInf <= gtol)
        {
            res.status = LbfgsStatus::Converged;
            break;
        }
        fhist.push_back(fx);
        if (cfg.relCostTol > 0.0 && static_cast<int>(fhist.size()) > cfg.past)
        {
            const double old = fhist[fhist.size() - 1 - static_cast<std::size_t>(cfg.past)];
            if (old - fx <= cfg.relCostTol * std::max(1.0, std::abs(fx)))
            {
                res.status = LbfgsStatus::CostStalled;
                break;
            }
        }
        if (iter + 1 == cfg.maxIterations)
            res.status = LbfgsStatus::MaxIterations;
    }
    return res;
}

} // namespace swarmtraj
