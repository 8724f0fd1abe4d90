#include "swarmtraj/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swarmtraj
{

void SolverConfig::validate() const
{
    lbfgs.validate();
    if (continuationRounds < 0 || !(continuationFactor > 0.0 && continuationFactor < 1.0))
    {
        throw Error(ErrorCode::InvalidConfig, "invalid continuation schedule");
    }
}

MincoTrajectory Problem::trajectory(const Eigen::VectorXd &x) const
{
    const int dim = chart->dimension();
    const Eigen::Matrix3Xd q = dim > 0 ? chart->waypoints(x.head(dim)) : Eigen::Matrix3Xd(3, 0);
    return MincoTrajectory::construct(q, durationsFromTau(x.tail(pieces())), boundary, startTime);
}

double compositeObjective(const Problem &p, const Eigen::VectorXd &x, Eigen::VectorXd &grad, ObjectiveParts *parts)
{
    const int dim = p.chart->dimension();
    const int M = p.pieces();
    grad.setZero(x.size());
    try
    {
        const MincoTrajectory traj = p.trajectory(x);
        PenaltyTerm total = objectiveTerm(traj, p.penalty);
        ObjectiveParts local;
        local.energy = total.value;
        if (p.penalty.wCorridor > 0.0)
        {
            const auto t = corridorPenalty(traj, p.corridor, p.penalty);
            local.corridor = t.value;
            total.accumulate(t, p.penalty.wCorridor);
        }
        if (p.capsule && p.penalty.wCapsule > 0.0 && !p.neighbors.empty())
        {
            const auto t = capsulePenalty(traj, p.neighbors, p.margins, p.penalty);
            local.capsule = t.value;
            total.accumulate(t, p.penalty.wCapsule);
        }
        if (p.penalty.wLimits > 0.0)
        {
            const auto t = limitsPenalty(traj, p.model, p.limits, p.yaw, p.penalty);
            local.limits = t.value;
            total.accumulate(t, p.penalty.wLimits);
        }
        if (!std::isfinite(total.value))
            return std::numeric_limits<double>::infinity();
        const auto g = traj.propagate(total.gradC, total.gradT);
        if (dim > 0)
            grad.head(dim) = p.chart->pullback(x.head(dim), g.waypoints);
        grad.tail(M) = g.durations.cwiseProduct(traj.durations());
        if (parts)
            *parts = local;
        return total.value;
    }
    catch (const Error &e)
    {
        if (e.code() == ErrorCode::SingularAttitude || e.code() == ErrorCode::SingularSystem)
            return std::numeric_limits<double>::infinity();
        throw;
    }
}

SolveResult solveTrajectory(const Problem &p, const Eigen::VectorXd &x0, const SolverConfig &cfg)
{
    cfg.validate();
    if (!p.chart || p.chart->junctions() != p.pieces() - 1 || x0.size() != p.chart->dimension() + p.pieces())
    {
        throw Error(ErrorCode::InvalidArgument, "problem and initial point do not match");
    }
    Problem work = p;
    SolveResult out;
    Eigen::VectorXd x = x0;
    for (int round = 0; round <= cfg.continuationRounds; round++)
    {
        auto f = [&](const Eigen::VectorXd &y, Eigen::VectorXd &g) { return compositeObjective(work, y, g); };
        const auto r = minimizeLbfgs(f, x, cfg.lbfgs);
        x = r.x;
        out.status = r.status;
        out.iterations += r.iterations;
        out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
        work.penalty.mu *= cfg.continuationFactor;
    }
    work.penalty.mu = p.penalty.mu;
    Eigen::VectorXd g;
    out.x = x;
    out.objective = compositeObjective(p, x, g, &out.parts);
    out.trajectory = p.trajectory(x);
    return out;
}

double StampedProfile::arrival() const
{
    return pieces.empty() ? departure : pieces.back().t0 + pieces.back().duration;
}

double StampedProfile::length() const
{
    if (pieces.empty())
        return 0.0;
    const auto &b = pieces.back();
    return b.s0 + b.v0 * b.duration + 0.5 * b.a * b.duration * b.duration;
}

double StampedProfile::sAt(double t) const
{
    if (pieces.empty() || t <= pieces.front().t0)
        return 0.0;
    for (const auto &p : pieces)
    {
        if (t <= p.t0 + p.duration)
        {
            const double u = t - p.t0;
            return p.s0 + p.v0 * u + 0.5 * p.a * u * u;
        }
    }
    return length();
}

double StampedProfile::vAt(double t) const
{
    for (const auto &p : pieces)
    {
        if (t >= p.t0 && t <= p.t0 + p.duration)
            return std::max(0.0, p.v0 + p.a * (t - p.t0));
    }
    return 0.0;
}

double StampedProfile::timeAt(double s) const
{
    if (pieces.empty() || s <= 0.0)
        return departure;
    for (const auto &p : pieces)
    {
        const double end = p.s0 + p.v0 * p.duration + 0.5 * p.a * p.duration * p.duration;
        if (s > end)
            continue;
        const double ds = s - p.s0;
        double u;
        if (std::abs(p.a) < 1e-12)
        {
            u = p.v0 > 0.0 ? ds / p.v0 : 0.0;
        }
        else
        {
            const double disc = std::max(p.v0 * p.v0 + 2.0 * p.a * ds, 0.0);
            u = (-p.v0 + std::sqrt(disc)) / p.a;
        }
        return p.t0 + std::clamp(u, 0.0, p.duration);
    }
    return arrival();
}

SpaceTimeOccupancy::SpaceTimeOccupancy(std::span<const MincoTrajectory *const> neighbors, const SafetyMargins &margins,
                                       double resolution)
    : margins_(margins), h_(resolution)
{
    if (!(resolution > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "occupancy lattice step must be positive");
    }
    const double sw = std::sqrt(margins.vertical);
    const double win = 2.0 * margins.temporal;
    for (const auto *n : neighbors)
    {
        Track tr;
        tr.first = static_cast<long>(std::floor((n->startTime() - win) / h_)) - 1;
        const long last = static_cast<long>(std::ceil((n->endTime() + win) / h_)) + 1;
        for (long k = tr.first; k <= last; k++)
        {
            Vec3 x = n->eval(static_cast<double>(k) * h_, 0);
            x(2) *= sw;
            tr.samples.push_back(x);
        }
        for (std::size_t b = 0; b < tr.samples.size(); b += 16)
        {
            Aabb box = Aabb::empty();
            for (std::size_t k = b; k < std::min(b + 16, tr.samples.size()); k++)
                box.expand(tr.samples[k]);
            tr.blocks.push_back(box);
        }
        latestEnd_ = std::max(latestEnd_, n->endTime());
        tracks_.push_back(std::move(tr));
    }
}

double SpaceTimeOccupancy::margin(const Vec3 &p, double t) const
{
    Vec3 x = p;
    x(2) *= std::sqrt(margins_.vertical);
    const double win = 2.0 * margins_.temporal;
    const long kLo = static_cast<long>(std::ceil((t - win) / h_ - 1e-9));
    const long kHi = static_cast<long>(std::floor((t + win) / h_ + 1e-9));
    double best2 = std::numeric_limits<double>::infinity();
    for (const auto &tr : tracks_)
    {
        const long last = tr.first + static_cast<long>(tr.samples.size()) - 1;
        // outside the stored range the neighbor sits still at its endpoint
        const long lo = std::clamp(kLo, tr.first, last) - tr.first;
        const long hi = std::clamp(kHi, tr.first, last) - tr.first;
        for (long b = lo / 16; b <= hi / 16; b++)
        {
            const Aabb &box = tr.blocks[static_cast<std::size_t>(b)];
            const Vec3 gap = (box.lo - x).cwiseMax(x - box.hi).cwiseMax(0.0);
            if (gap.squaredNorm() >= best2)
                continue;
            const long k0 = std::max(lo, b * 16), k1 = std::min(hi, b * 16 + 15);
            for (long k = k0; k <= k1; k++)
                best2 = std::min(best2, (tr.samples[static_cast<std::size_t>(k)] - x).squaredNorm());
        }
    }
    return std::sqrt(best2) - 2.0 * margins_.radius;
}

void ScheduleConfig::validate() const
{
    if (samples < 0 || !(horizonFactor >= 1.0) || !(resolutionFactor > 0.0) || parentCandidates < 1 ||
        !(departureBias >= 0.0 && departureBias <= 1.0))
    {
        throw Error(ErrorCode::InvalidConfig, "invalid scheduler settings");
    }
}

namespace
{

// ramp v0 -> vc, cruise at vc, ramp vc -> v1
struct Steer
{
    double vc = 0.0, ta = 0.0, tc = 0.0, td = 0.0;
};

double steerDistance(double v0, double v1, double vc, double dt, double a, Steer &st)
{
    st.vc = vc;
    st.ta = std::abs(vc - v0) / a;
    st.td = std::abs(vc - v1) / a;
    st.tc = std::max(0.0, dt - st.ta - st.td);
    return 0.5 * (v0 + vc) * st.ta + vc * st.tc + 0.5 * (vc + v1) * st.td;
}

// connection in exactly dt; the distance covered grows monotonically with the cruise speed
bool steerFixedTime(double s0, double v0, double s1, double v1, double dt, double vMax, double a, Steer &st)
{
    const double D = s1 - s0;
    if (D < -1e-12 || dt < 0.0 || std::abs(v0 - v1) > a * dt + 1e-12)
        return false;
    double lo = std::max(0.0, 0.5 * (v0 + v1 - a * dt)), hi = std::min(vMax, 0.5 * (v0 + v1 + a * dt));
    if (lo > hi)
        return false;
    Steer tmp;
    if (D < steerDistance(v0, v1, lo, dt, a, tmp) - 1e-9 || D > steerDistance(v0, v1, hi, dt, a, tmp) + 1e-9)
        return false;
    for (int it = 0; it < 80; it++)
    {
        const double mid = 0.5 * (lo + hi);
        if (steerDistance(v0, v1, mid, dt, a, tmp) < D)
            lo = mid;
        else
            hi = mid;
    }
    steerDistance(v0, v1, 0.5 * (lo + hi), dt, a, st);
    return true;
}

// fastest stop at s = L from (s, v); false when the vehicle cannot brake in time
bool steerToGoal(double s, double v, double L, double vMax, double a, Steer &st)
{
    const double D = L - s;
    if (v * v / (2.0 * a) > D + 1e-9)
        return false;
    const double vp = std::min(vMax, std::sqrt(std::max(a * D + 0.5 * v * v, 0.0)));
    st.vc = vp;
    st.ta = std::max(vp - v, 0.0) / a;
    st.td = vp / a;
    const double ramps = (vp * vp - v * v) / (2.0 * a) + vp * vp / (2.0 * a);
    st.tc = vp > 0.0 ? std::max(0.0, (D - ramps) / vp) : 0.0;
    return true;
}

void appendSteer(std::vector<ProfilePiece> &out, double t0, double s0, double v0, double v1, const Steer &st, double a)
{
    double t = t0, s = s0, v = v0;
    auto push = [&](double acc, double dur) {
        if (dur <= 0.0)
            return;
        out.push_back({t, s, v, acc, dur});
        s += v * dur + 0.5 * acc * dur * dur;
        v += acc * dur;
        t += dur;
    };
    push(st.vc >= v0 ? a : -a, st.ta);
    v = st.vc;
    push(0.0, st.tc);
    push(v1 >= st.vc ? a : -a, st.td);
}

struct KNode
{
    double s = 0.0, v = 0.0, t = 0.0;
    int parent = -1;
    bool departed = false;
    std::vector<ProfilePiece> edge;
};

} // namespace

StampedProfile temporalSchedule(const Path &curve, std::span<const MincoTrajectory *const> neighbors,
                                const SafetyMargins &margins, double vMax, double aMax, double tRequest,
                                const ScheduleConfig &cfg, std::mt19937_64 &rng)
{
    cfg.validate();
    if (!(vMax > 0.0) || !(aMax > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "scheduler needs positive speed and acceleration limits");
    }
    const double L = curve.length();
    const double h = latticeStep(margins, cfg.resolutionFactor);
    const SpaceTimeOccupancy occ(neighbors, margins, h);

    // samples along the pieces; before departure the vehicle is not yet in the airspace
    auto valid = [&](const std::vector<ProfilePiece> &pieces, bool departed) {
        for (const auto &p : pieces)
        {
            const int n = std::max(1, static_cast<int>(std::ceil(p.duration / h)));
            for (int k = 0; k <= n; k++)
            {
                const double u = p.duration * k / n;
                const double s = p.s0 + p.v0 * u + 0.5 * p.a * u * u;
                if (!departed && s <= 0.0)
                    continue;
                departed = true;
                if (occ.margin(curve.at(s), p.t0 + u) < 0.0)
                    return false;
            }
        }
        return true;
    };
    auto hold = [&](double t0, double s, double dur) { return ProfilePiece{t0, s, 0.0, 0.0, dur}; };

    std::vector<KNode> nodes;
    nodes.push_back({0.0, 0.0, tRequest, -1, false, {}});
    int bestParent = -1;
    double bestArrival = std::numeric_limits<double>::infinity();
    std::vector<ProfilePiece> bestTail;

    auto tryGoal = [&](int id) {
        const KNode &n = nodes[static_cast<std::size_t>(id)];
        Steer st;
        if (!steerToGoal(n.s, n.v, L, vMax, aMax, st))
            return;
        const double arrive = n.t + st.ta + st.tc + st.td;
        if (arrive >= bestArrival)
            return;
        std::vector<ProfilePiece> tail;
        appendSteer(tail, n.t, n.s, n.v, 0.0, st, aMax);
        if (valid(tail, n.departed))
        {
            bestArrival = arrive;
            bestParent = id;
            bestTail = std::move(tail);
        }
    };

    // departure delays: immediate, a scan at half-window steps, and the all-clear fallback
    const double Ttrap = trapezoidDuration(L, vMax, aMax);
    const double clear = std::max(tRequest, occ.latestEnd() + 2.0 * margins.temporal + h);
    tryGoal(0);
    const double step = std::max(h, 0.5 * margins.temporal);
    for (double t = tRequest + step; t < clear && t < bestArrival; t += step)
    {
        nodes.push_back({0.0, 0.0, t, 0, false, {hold(tRequest, 0.0, t - tRequest)}});
        tryGoal(static_cast<int>(nodes.size()) - 1);
        if (bestParent >= 0)
            break;
    }
    if (bestParent < 0)
    {
        nodes.push_back({0.0, 0.0, clear, 0, false, {hold(tRequest, 0.0, clear - tRequest)}});
        tryGoal(static_cast<int>(nodes.size()) - 1);
    }

    // kinodynamic tree over (s, v, t) to improve the arrival time
    const double horizon = cfg.horizonFactor * std::max(Ttrap, 1e-3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<double, int>> cand;
    for (int it = 0; it < cfg.samples && L > 0.0; it++)
    {
        const bool dep = unit(rng) < cfg.departureBias;
        const double s = dep ? 0.0 : L * unit(rng);
        const double v = dep ? 0.0 : vMax * unit(rng);
        const double t = tRequest + horizon * unit(rng);
        Steer st;
        if (!steerToGoal(s, v, L, vMax, aMax, st) || t + st.ta + st.tc + st.td >= bestArrival)
            continue;
        cand.clear();
        for (std::size_t k = 0; k < nodes.size(); k++)
        {
            const KNode &n = nodes[k];
            if (n.t >= t || n.s > s)
                continue;
            cand.emplace_back(std::abs(s - n.s) / std::max(L, 1e-9) + (t - n.t) / horizon, static_cast<int>(k));
        }
        std::sort(cand.begin(), cand.end());
        int tried = 0;
        for (const auto &c : cand)
        {
            if (tried >= cfg.parentCandidates)
                break;
            const KNode &n = nodes[static_cast<std::size_t>(c.second)];
            Steer e;
            if (!steerFixedTime(n.s, n.v, s, v, t - n.t, vMax, aMax, e))
                continue;
            tried++;
            std::vector<ProfilePiece> edge;
            appendSteer(edge, n.t, n.s, n.v, v, e, aMax);
            if (!valid(edge, n.departed))
                continue;
            const bool departed = n.departed || s > 0.0;
            nodes.push_back({s, v, t, c.second, departed, std::move(edge)});
            tryGoal(static_cast<int>(nodes.size()) - 1);
            break;
        }
    }

    if (bestParent < 0)
    {
        throw Error(ErrorCode::ScheduleTimeout, "no conflict-free schedule found; the goal region stays blocked");
    }
    std::vector<ProfilePiece> all = bestTail;
    for (int n = bestParent; n > 0; n = nodes[static_cast<std::size_t>(n)].parent)
    {
        const auto &e = nodes[static_cast<std::size_t>(n)].edge;
        all.insert(all.begin(), e.begin(), e.end());
    }
    // the initial wait at s = 0 becomes a later departure
    StampedProfile prof;
    std::size_t first = 0;
    while (first < all.size() && all[first].s0 <= 0.0 && all[first].v0 <= 0.0 && all[first].a <= 0.0)
        first++;
    prof.pieces.assign(all.begin() + static_cast<long>(first), all.end());
    prof.departure = prof.pieces.empty() ? tRequest : prof.pieces.front().t0;
    return prof;
}

CheckReport checkContainment(const MincoTrajectory &traj, const PolyMap &map, double dt)
{
    CheckReport rep;
    const int n = std::max(1, static_cast<int>(std::ceil(traj.totalDuration() / dt)));
    for (int k = 0; k <= n; k++)
    {
        const double t = traj.startTime() + traj.totalDuration() * k / n;
        rep.containment = std::min(rep.containment, map.containmentMargin(traj.eval(t, 0)));
    }
    return rep;
}

void checkNeighbors(CheckReport &rep, const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                    const SafetyMargins &margins, double resolution)
{
    for (std::size_t i = 0; i < neighbors.size(); i++)
    {
        const auto r = checkEquivalentCriterion(traj, *neighbors[i], margins, resolution);
        if (r.worstMargin < rep.criterion)
        {
            rep.criterion = r.worstMargin;
            rep.worstNeighbor = static_cast<int>(i);
        }
    }
}

void checkLimits(CheckReport &rep, const MincoTrajectory &traj, const VehicleModel &model, const Limits &limits,
                 double yaw, double dt)
{
    const int n = std::max(1, static_cast<int>(std::ceil(traj.totalDuration() / dt)));
    for (int k = 0; k <= n; k++)
    {
        const double t = traj.startTime() + traj.totalDuration() * k / n;
        FlatPoint p;
        p.pos = traj.eval(t, 0);
        p.vel = traj.eval(t, 1);
        p.acc = traj.eval(t, 2);
        p.jerk = traj.eval(t, 3);
        p.yaw = yaw;
        try
        {
            rep.limits = std::max(rep.limits, normalizedResidual(limits, flatnessMap(model, p)).maxCoeff());
        }
        catch (const Error &)
        {
            rep.limits = std::numeric_limits<double>::infinity();
        }
    }
}

void densifyQuadrature(PenaltyConfig &cfg, const MincoTrajectory &traj, std::span<const MincoTrajectory *const> neighbors,
                       double temporal, double spacing, double capsuleSpacing, int maxNodes)
{
    constexpr int n = 32;
    double longest = 0.0;
    for (int i = 0; i < traj.pieces(); i++)
    {
        const double T = traj.durations()(i);
        double arc = 0.0;
        for (int k = 0; k <= n; k++)
            arc += (k == 0 || k == n ? 0.5 : 1.0) * traj.evalPiece(i, T * k / n, 1).norm() * T / n;
        longest = std::max(longest, arc);
    }
    double fastest = 0.0;
    for (const auto *nb : neighbors)
        for (int i = 0; i < nb->pieces(); i++)
            for (int k = 0; k <= n; k++)
                fastest = std::max(fastest, nb->evalPiece(i, nb->durations()(i) * k / n, 1).norm());
    auto need = [&](double len, double ds) { return static_cast<int>(std::min<double>(maxNodes, std::ceil(len / ds))); };
    cfg.nodesPerPiece = std::max(cfg.nodesPerPiece, need(longest, spacing));
    cfg.capsuleNodesT = std::max(cfg.capsuleNodesT, need(longest, capsuleSpacing));
    if (temporal > 0.0)
        cfg.capsuleNodesV = std::max(cfg.capsuleNodesV, need(4.0 * temporal * fastest, capsuleSpacing));
}

void PlannerConfig::validate() const
{
    model.validate();
    limits.validate(model);
    margins.validate();
    penalty.validate();
    solver.validate();
    rrt.validate();
    schedule.validate();
    if (!(accelLimit() > 0.0) || !(refineDelta > 0.0) || radiusInflation < 0.0 || temporalInflation < 0.0 ||
        !(limitMargin >= 0.0 && limitMargin < 0.5) || !(corridorMargin >= 0.0) ||
        !(scheduleDragShare > 0.0 && scheduleDragShare < 1.0) ||
        !(checkStep > 0.0) || !(checkTolerance >= 0.0) || !(nodeSpacing > 0.0) || !(capsuleSpacing > 0.0) ||
        maxNodesPerPiece < 1 || retries < 0)
    {
        throw Error(ErrorCode::InvalidConfig, "invalid planner settings");
    }
}

double PlannerConfig::accelLimit() const
{
    return aMax > 0.0 ? aMax : limits.fMax / model.mass - model.gravity;
}

void PlannerConfig::scheduleDynamics(double &vMax, double &aMax) const
{
    const Limits l = planningLimits();
    // level flight: drag plus forward acceleration share the tilt budget g tan(theta)
    const double budget = model.gravity * std::tan(l.thetaMax);
    const double cruise = scheduleDragShare * budget;
    const double k1 = model.dragH / model.mass, k2 = model.dragH * model.parasitic / model.mass;
    double v = l.vMax;
    if (k2 > 0.0)
        v = (-k1 + std::sqrt(k1 * k1 + 4.0 * k2 * cruise)) / (2.0 * k2);
    else if (k1 > 0.0)
        v = cruise / k1;
    vMax = std::min(v, l.vMax);
    aMax = std::min(accelLimit(), budget - k1 * vMax - k2 * vMax * vMax);
}

Limits PlannerConfig::planningLimits(double scale) const
{
    Limits l = limits;
    const double k = 1.0 - std::min(limitMargin * scale, 0.5);
    l.vMax *= k;
    l.omegaMax *= k;
    l.thetaMax *= k;
    const double mid = limits.fMid(), rad = limits.fRad() * k;
    l.fMin = mid - rad;
    l.fMax = mid + rad;
    return l;
}

SafetyMargins PlannerConfig::planningMargins() const
{
    SafetyMargins m = margins;
    m.radius *= 1.0 + radiusInflation;
    m.temporal *= 1.0 + temporalInflation;
    return m;
}

namespace
{

template <class... A> std::string fmt(const A &...parts)
{
    std::ostringstream os;
    (os << ... << parts);
    return os.str();
}

std::vector<double> arcAtJoints(const MincoTrajectory &traj, double dt, Path &curve)
{
    std::vector<Vec3> pts;
    std::vector<double> joints;
    double t = traj.startTime();
    for (int i = 0; i < traj.pieces(); i++)
    {
        const int n = std::max(2, static_cast<int>(std::ceil(traj.durations()(i) / dt)));
        for (int k = 0; k < n; k++)
        {
            if (k == 0)
                joints.push_back(static_cast<double>(pts.size()));
            pts.push_back(traj.evalPiece(i, traj.durations()(i) * k / n, 0));
        }
        t += traj.durations()(i);
    }
    pts.push_back(traj.eval(traj.endTime(), 0));
    curve = Path(pts);
    std::vector<double> s;
    for (double j : joints)
        s.push_back(curve.cumulative()[static_cast<std::size_t>(j)]);
    s.push_back(curve.length());
    return s;
}

} // namespace

PlanResult planMission(const PolyMap &map, std::span<const MincoTrajectory *const> neighbors, const Mission &mission,
                       const PlannerConfig &cfg, std::mt19937_64 &rng)
{
    cfg.validate();
    PlanResult out;
    const SafetyMargins planM = cfg.planningMargins();
    const double aMax = cfg.accelLimit();

    const Path path = informedRrtStar(map, mission.start, mission.goal, cfg.rrt, rng);
    out.log.push_back(fmt("path length ", path.length()));
    Corridor corridor;
    if (path.points().size() == 1)
    {
        throw Error(ErrorCode::InvalidArgument, "start and goal coincide");
    }
    corridor = corridorFromPath(map, path);
    out.corridorSize = corridor.size();
    out.log.push_back(fmt("corridor polytopes ", corridor.size()));
    const CoordinateChart chart = CoordinateChart::build(map, corridor.ids);
    const auto waypoints = shortestPathRefine(chart, corridor, cfg.refineDelta);

    std::vector<Vec3> chain{mission.start};
    chain.insert(chain.end(), waypoints.begin(), waypoints.end());
    chain.push_back(mission.goal);
    const Eigen::VectorXd T0 = trapezoidalAllocation(chain, cfg.planningLimits().vMax, aMax);

    std::vector<HalfspacePolytope> shrunk;
    for (int id : corridor.ids)
    {
        shrunk.push_back(map.polytope(id));
        shrunk.back().offsets.array() -= cfg.corridorMargin;
    }
    Problem prob;
    prob.chart = &chart;
    for (const auto &p : shrunk)
        prob.corridor.push_back(&p);
    prob.boundary = BoundaryState::hover(mission.start, mission.goal);
    prob.startTime = mission.requestTime;
    prob.penalty = cfg.penalty;
    prob.margins = planM;
    prob.model = cfg.model;
    prob.limits = cfg.planningLimits();
    prob.yaw = cfg.yaw;
    prob.neighbors.assign(neighbors.begin(), neighbors.end());
    prob.capsule = false;

    Eigen::Matrix3Xd q0(3, static_cast<Eigen::Index>(waypoints.size()));
    for (std::size_t i = 0; i < waypoints.size(); i++)
        q0.col(static_cast<Eigen::Index>(i)) = waypoints[i];
    Eigen::VectorXd x0(chart.dimension() + corridor.size());
    x0 << chart.invert(q0), tauFromDurations(T0);

    const double capsuleDs = cfg.capsuleSpacing * std::max(planM.radius, 1e-3);
    auto densify = [&](const Eigen::VectorXd &x) {
        densifyQuadrature(prob.penalty, prob.trajectory(x), neighbors, planM.temporal, cfg.nodeSpacing, capsuleDs,
                          cfg.maxNodesPerPiece);
    };
    densify(x0);
    SolveResult sol = solveTrajectory(prob, x0, cfg.solver);
    out.log.push_back(fmt("spatial-temporal solve without capsules, objective ", sol.objective));

    const double h = latticeStep(planM, cfg.schedule.resolutionFactor);
    bool safe = true;
    for (const auto *n : neighbors)
        safe = safe && checkEquivalentCriterion(sol.trajectory, *n, planM, h).satisfied;

    const SolveResult free = sol;
    double vSched = 0.0, aSched = 0.0;
    cfg.scheduleDynamics(vSched, aSched);
    auto scheduleAndSolve = [&](const SafetyMargins &m) {
        out.scheduled = true;
        Path curve;
        const auto sj = arcAtJoints(free.trajectory, 0.02, curve);
        const StampedProfile prof =
            temporalSchedule(curve, neighbors, m, vSched, aSched, mission.requestTime, cfg.schedule, rng);
        out.log.push_back(fmt("scheduled departure ", prof.departure));
        out.log.push_back(fmt("scheduled arrival ", prof.arrival()));
        Eigen::VectorXd T(corridor.size());
        for (int i = 0; i < corridor.size(); i++)
        {
            const auto k = static_cast<std::size_t>(i);
            T(i) = std::max(prof.timeAt(sj[k + 1]) - prof.timeAt(sj[k]), 1e-2);
        }
        prob.startTime = prof.departure;
        prob.capsule = true;
        prob.margins = m;
        Eigen::VectorXd x1 = free.x;
        x1.tail(corridor.size()) = tauFromDurations(T);
        densify(x1);
        sol = solveTrajectory(prob, x1, cfg.solver);
        out.log.push_back(fmt("spatial-temporal solve with capsules, objective ", sol.objective));
    };
    if (safe)
        out.log.push_back("nominal trajectory is reciprocally safe; scheduling skipped");
    else
        scheduleAndSolve(planM);

    auto audit = [&](const MincoTrajectory &tr) {
        CheckReport rep = checkContainment(tr, map, cfg.checkStep);
        checkNeighbors(rep, tr, neighbors, cfg.margins, latticeStep(cfg.margins, 0.02));
        checkLimits(rep, tr, cfg.model, cfg.limits, cfg.yaw, cfg.checkStep);
        return rep;
    };
    out.report = audit(sol.trajectory);
    SolverConfig retry = cfg.solver;
    retry.continuationRounds = 0;
    retry.lbfgs.maxIterations *= 3;
    for (int r = 0; r < cfg.retries && !out.report.pass(cfg.checkTolerance); r++)
    {
        out.log.push_back(fmt("post-check failed (containment ", out.report.containment, ", criterion ",
                              out.report.criterion, ", limits ", out.report.limits, "), retry ", r + 1));
        if (out.report.criterion < -cfg.checkTolerance)
        {
            // wider buffers for a fresh schedule
            SafetyMargins m = planM;
            m.radius *= 1.0 + 0.1 * (r + 1);
            m.temporal *= 1.0 + 0.25 * (r + 1);
            out.log.push_back(fmt("rescheduling with temporal margin ", m.temporal));
            scheduleAndSolve(m);
        }
        else
        {
            prob.penalty.mu *= cfg.solver.continuationFactor;
            prob.penalty.wCorridor *= 4.0;
            prob.penalty.wCapsule *= 4.0;
            prob.penalty.wLimits *= 4.0;
            densify(sol.x);
            sol = solveTrajectory(prob, sol.x, retry);
        }
        out.report = audit(sol.trajectory);
    }
    out.trajectory = sol.trajectory;
    out.log.push_back(fmt("containment margin ", out.report.containment));
    out.log.push_back(fmt("criterion margin ", out.report.criterion));
    out.log.push_back(fmt("limit residual ", out.report.limits));
    if (!out.report.pass(cfg.checkTolerance))
    {
        std::ostringstream os;
        os << "post-check failed: containment " << out.report.containment << ", criterion " << out.report.criterion
           << " (neighbor " << out.report.worstNeighbor << "), limits " << out.report.limits;
        throw Error(ErrorCode::PostCheckFailure, os.str());
    }
    return out;
}

} // namespace swarmtraj
