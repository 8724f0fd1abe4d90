#include "swarmtraj/penalty.hpp"

#include <algorithm>
#include <cmath>

namespace swarmtraj
{

double phi(double mu, double x, double *derivative)
{
    if (x <= 0.0)
    {
        if (derivative)
            *derivative = 0.0;
        return 0.0;
    }
    if (x >= mu)
    {
        if (derivative)
            *derivative = 1.0;
        return x - 0.5 * mu;
    }
    const double r = x / mu;
    if (derivative)
        *derivative = (3.0 * mu - 2.0 * x) * r * r / mu;
    return (mu - 0.5 * x) * r * r * r;
}

void PenaltyConfig::validate() const
{
    if (!(mu > 0.0) || !(wCorridor >= 0.0) || !(wCapsule >= 0.0) || !(wLimits >= 0.0) || !(rho >= 0.0))
    {
        throw Error(ErrorCode::InvalidConfig, "penalty weights must be nonnegative and mu positive");
    }
    for (int n : {nodesPerPiece, capsuleNodesT, capsuleNodesV})
    {
        if (n < 4 || n % 2 != 0)
        {
            throw Error(ErrorCode::InvalidConfig, "quadrature node counts must be even and at least 4");
        }
    }
}

void SafetyMargins::validate() const
{
    if (!(radius > 0.0) || !(temporal >= 0.0) || !(vertical > 0.0 && vertical <= 1.0))
    {
        throw Error(ErrorCode::InvalidConfig, "margins need M_r > 0, M_d >= 0 and 0 < w <= 1");
    }
}

void PenaltyTerm::resize(int pieces)
{
    value = 0.0;
    gradC.setZero(6 * pieces, 3);
    gradT.setZero(pieces);
}

void PenaltyTerm::accumulate(const PenaltyTerm &o, double weight)
{
    value += weight * o.value;
    gradC += weight * o.gradC;
    gradT += weight * o.gradT;
}

namespace
{

// Adds g . r^{(order)}(tau) pulled back onto the coefficients of one piece.
void addCoeffGrad(Eigen::MatrixX3d &gradC, int piece, double tau, int order, const Vec3 &g)
{
    for (int j = order; j < 6; j++)
    {
        gradC.row(6 * piece + j) += monomialDerivative(j, order, tau) * g.transpose();
    }
}

double trapezoidWeight(int k, int n, double span)
{
    return (k == 0 || k == n ? 0.5 : 1.0) * span / n;
}

} // namespace

PenaltyTerm objectiveTerm(const MincoTrajectory &traj, const PenaltyConfig &cfg)
{
    PenaltyTerm out;
    out.value = traj.energy(&out.gradC, &out.gradT);
    out.value += cfg.rho * traj.totalDuration();
    out.gradT.array() += cfg.rho;
    return out;
}

PenaltyTerm corridorPenalty(const MincoTrajectory &traj, std::span<const HalfspacePolytope *const> polytopes,
                            const PenaltyConfig &cfg)
{
    const int M = traj.pieces();
    if (static_cast<int>(polytopes.size()) != M)
    {
        throw Error(ErrorCode::InvalidArgument, "one corridor polytope per piece required");
    }
    PenaltyTerm out;
    out.resize(M);
    const int n = cfg.nodesPerPiece;
    for (int i = 0; i < M; i++)
    {
        const HalfspacePolytope &P = *polytopes[static_cast<std::size_t>(i)];
        const double T = traj.durations()(i);
        for (int k = 0; k <= n; k++)
        {
            const double tau = T * k / n;
            const Vec3 r = traj.evalPiece(i, tau, 0);
            double pen = 0.0;
            Vec3 g = Vec3::Zero();
            for (int f = 0; f < P.faceCount(); f++)
            {
                const double viol = P.normals.row(f).dot(r) - P.offsets(f);
                if (viol <= 0.0)
                    continue;
                double d = 0.0;
                pen += phi(cfg.mu, viol, &d);
                g += d * P.normals.row(f).transpose();
            }
            if (pen == 0.0)
                continue;
            const double w = trapezoidWeight(k, n, T);
            out.value += w * pen;
            addCoeffGrad(out.gradC, i, tau, 0, w * g);
            out.gradT(i) += pen * w / T + w * g.dot(traj.evalPiece(i, tau, 1)) * k / n;
        }
    }
    return out;
}

PenaltyTerm capsulePenalty(const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                           const SafetyMargins &margins, const PenaltyConfig &cfg)
{
    const int M = traj.pieces();
    PenaltyTerm out;
    out.resize(M);
    if (neighbors.empty())
    {
        return out;
    }

    const Vec3 W = margins.weights();
    const double thresh = 4.0 * margins.radius * margins.radius;
    const Aabb box = trajectoryBox(traj);
    const Vec3 reach(2.0 * margins.radius, 2.0 * margins.radius, 2.0 * margins.radius / std::sqrt(margins.vertical));

    std::vector<const MincoTrajectory *> active;
    for (const auto *nb : neighbors)
    {
        const Aabb nbox = trajectoryBox(*nb);
        if (Aabb(nbox.lo - reach, nbox.hi + reach).intersects(box))
        {
            active.push_back(nb);
        }
    }
    if (active.empty())
    {
        return out;
    }

    // temporal offsets and weights; a zero margin collapses the window to one unit node
    std::vector<double> vs, vw;
    if (margins.temporal > 0.0)
    {
        const int nv = cfg.capsuleNodesV;
        for (int l = 0; l <= nv; l++)
        {
            vs.push_back(-2.0 * margins.temporal + 4.0 * margins.temporal * l / nv);
            vw.push_back(trapezoidWeight(l, nv, 4.0 * margins.temporal));
        }
    }
    else
    {
        vs.push_back(0.0);
        vw.push_back(1.0);
    }

    const int n = cfg.capsuleNodesT;
    // sensitivity of the integrand to a shift of absolute time within each piece
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(M);
    for (int i = 0; i < M; i++)
    {
        const double T = traj.durations()(i);
        const double start = traj.pieceStart(i);
        for (int k = 0; k <= n; k++)
        {
            const double tau = T * k / n;
            const double tAbs = start + tau;
            const Vec3 r = traj.evalPiece(i, tau, 0);
            const double w = trapezoidWeight(k, n, T);
            double pen = 0.0;
            Vec3 gr = Vec3::Zero();
            double gshift = 0.0;
            for (const auto *nb : active)
            {
                for (std::size_t l = 0; l < vs.size(); l++)
                {
                    const Vec3 d = r - nb->eval(tAbs + vs[l], 0);
                    const double x = thresh - d.dot(W.cwiseProduct(d));
                    if (x <= 0.0)
                        continue;
                    double dphi = 0.0;
                    pen += vw[l] * phi(cfg.mu, x, &dphi);
                    const Vec3 gd = -2.0 * dphi * vw[l] * W.cwiseProduct(d);
                    gr += gd;
                    gshift -= gd.dot(nb->eval(tAbs + vs[l], 1));
                }
            }
            if (pen == 0.0 && gr.isZero(0.0))
                continue;
            out.value += w * pen;
            addCoeffGrad(out.gradC, i, tau, 0, w * gr);
            out.gradT(i) += pen * w / T + w * (gr.dot(traj.evalPiece(i, tau, 1)) + gshift) * k / n;
            shift(i) += w * gshift;
        }
    }
    // absolute node times of piece i move with every earlier duration
    double suffix = 0.0;
    for (int i = M - 1; i >= 0; i--)
    {
        out.gradT(i) += suffix;
        suffix += shift(i);
    }
    return out;
}

PenaltyTerm limitsPenalty(const MincoTrajectory &traj, const VehicleModel &model, const Limits &limits, double yaw,
                          const PenaltyConfig &cfg)
{
    const int M = traj.pieces();
    PenaltyTerm out;
    out.resize(M);
    const int n = cfg.nodesPerPiece;
    const double v2 = limits.vMax * limits.vMax, w2 = limits.omegaMax * limits.omegaMax;
    const double cosT = std::cos(limits.thetaMax), fm = limits.fMid(), fr2 = limits.fRad() * limits.fRad();
    for (int i = 0; i < M; i++)
    {
        const double T = traj.durations()(i);
        for (int k = 0; k <= n; k++)
        {
            const double tau = T * k / n;
            FlatPoint p;
            p.pos = traj.evalPiece(i, tau, 0);
            p.vel = traj.evalPiece(i, tau, 1);
            p.acc = traj.evalPiece(i, tau, 2);
            p.jerk = traj.evalPiece(i, tau, 3);
            p.yaw = yaw;
            const StateInput s = flatnessMap(model, p);

            double d[4] = {0, 0, 0, 0};
            const double df = s.thrust - fm;
            const double pen = phi(cfg.mu, p.vel.squaredNorm() - v2, &d[0]) +
                               phi(cfg.mu, s.omega.squaredNorm() - w2, &d[1]) + phi(cfg.mu, cosT - s.zb(2), &d[2]) +
                               phi(cfg.mu, df * df - fr2, &d[3]);
            if (pen == 0.0 && d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0 && d[3] == 0.0)
                continue;
            const FlatGradient fg =
                flatnessBackward(model, p, s, d[3] * 2.0 * df, d[1] * 2.0 * s.omega, Vec3(0, 0, -d[2]));
            const Vec3 gv = fg.vel + d[0] * 2.0 * p.vel;
            const double w = trapezoidWeight(k, n, T);
            out.value += w * pen;
            addCoeffGrad(out.gradC, i, tau, 1, w * gv);
            addCoeffGrad(out.gradC, i, tau, 2, w * fg.acc);
            addCoeffGrad(out.gradC, i, tau, 3, w * fg.jerk);
            const double dtau = gv.dot(p.acc) + fg.acc.dot(p.jerk) + fg.jerk.dot(traj.evalPiece(i, tau, 4));
            out.gradT(i) += pen * w / T + w * dtau * k / n;
        }
    }
    return out;
}

Aabb trajectoryBox(const MincoTrajectory &traj)
{
    static constexpr double binom[6][6] = {{1, 0, 0, 0, 0, 0},  {1, 1, 0, 0, 0, 0},   {1, 2, 1, 0, 0, 0},
                                           {1, 3, 3, 1, 0, 0},  {1, 4, 6, 4, 1, 0},   {1, 5, 10, 10, 5, 1}};
    Aabb box = Aabb::empty();
    for (int i = 0; i < traj.pieces(); i++)
    {
        const double T = traj.durations()(i);
        Eigen::Matrix<double, 6, 3> scaled;
        double tp = 1.0;
        for (int j = 0; j < 6; j++)
        {
            scaled.row(j) = traj.coeffs().row(6 * i + j) * tp;
            tp *= T;
        }
        for (int k = 0; k < 6; k++)
        {
            Vec3 b = Vec3::Zero();
            for (int j = 0; j <= k; j++)
            {
                b += binom[k][j] / binom[5][j] * scaled.row(j).transpose();
            }
            box.expand(b);
        }
    }
    return box;
}

CriterionReport checkEquivalentCriterion(const MincoTrajectory &traj, const MincoTrajectory &neighbor,
                                         const SafetyMargins &margins, double resolution)
{
    if (!(resolution > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
    }
    const double h = resolution;
    const double t0 = traj.startTime(), tf = traj.endTime();
    const double Md = margins.temporal, Mr2 = 2.0 * margins.radius;
    const int K = std::max(0, static_cast<int>(std::ceil((tf - t0) / h - 1e-9)));
    const int J = static_cast<int>(std::floor(2.0 * Md / h + 1e-9));

    std::vector<Vec3> own(static_cast<std::size_t>(K) + 1), other(static_cast<std::size_t>(K + 2 * J) + 1);
    for (int k = 0; k <= K; k++)
    {
        own[static_cast<std::size_t>(k)] = traj.eval(std::min(t0 + k * h, tf), 0);
    }
    for (int l = -J; l <= K + J; l++)
    {
        other[static_cast<std::size_t>(l + J)] = neighbor.eval(t0 + l * h, 0);
    }

    CriterionReport rep;
    int bk = 0, bl = 0;
    for (int k = 0; k <= K; k++)
    {
        const Vec3 &x = own[static_cast<std::size_t>(k)];
        for (int l = k - J; l <= k + J; l++)
        {
            const double m = margins.weightedNorm(x - other[static_cast<std::size_t>(l + J)]) - Mr2;
            if (m < rep.worstMargin)
            {
                rep.worstMargin = m;
                bk = k;
                bl = l;
            }
        }
    }
    rep.satisfied = rep.worstMargin >= 0.0;
    rep.worstT = std::min(t0 + bk * h, tf);
    rep.worstGamma = t0 + bl * h;

    // golden-section polishing, alternating between gamma and t
    auto margin = [&](double t, double g) {
        return margins.weightedNorm(traj.eval(t, 0) - neighbor.eval(g, 0)) - Mr2;
    };
    auto golden = [](auto f, double lo, double hi) {
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
        double fa = f(a), fb = f(b);
        for (int it = 0; it < 40; it++)
        {
            if (fa < fb)
            {
                hi = b;
                b = a;
                fb = fa;
                a = hi - r * (hi - lo);
                fa = f(a);
            }
            else
            {
                lo = a;
                a = b;
                fa = fb;
                b = lo + r * (hi - lo);
                fb = f(b);
            }
        }
        return 0.5 * (lo + hi);
    };
    double t = rep.worstT, g = rep.worstGamma, best = rep.worstMargin;
    for (int round = 0; round < 3; round++)
    {
        const double gn = golden([&](double x) { return margin(t, x); }, std::max(g - h, t - 2 * Md),
                                 std::min(g + h, t + 2 * Md));
        if (margin(t, gn) < best)
        {
            g = gn;
            best = margin(t, g);
        }
        const double tn = golden(
            [&](double x) {
                // keep gamma inside the window of the moving t
                return margin(x, std::clamp(g, x - 2 * Md, x + 2 * Md));
            },
            std::max(t - h, t0), std::min(t + h, tf));
        const double gc = std::clamp(g, tn - 2 * Md, tn + 2 * Md);
        if (margin(tn, gc) < best)
        {
            t = tn;
            g = gc;
            best = margin(t, g);
        }
    }
    if (best < rep.worstMargin)
    {
        rep.worstMargin = best;
        rep.worstT = t;
        rep.worstGamma = g;
    }
    return rep;
}

} // namespace swarmtraj
