#include "swarmtraj/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace swarmtraj
{

const char *missionStatusName(MissionStatus s) noexcept
{
    switch (s)
    {
    case MissionStatus::Pending:
        return "pending";
    case MissionStatus::Committed:
        return "committed";
    case MissionStatus::Failed:
        return "failed";
    }
    return "unknown";
}

namespace
{

Aabb scaledBox(const MincoTrajectory &traj, const SafetyMargins &m)
{
    Aabb b = trajectoryBox(traj);
    const double s = std::sqrt(m.vertical);
    b.lo(2) *= s;
    b.hi(2) *= s;
    return b;
}

double boxGap(const Aabb &a, const Aabb &b)
{
    return (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(0.0).norm();
}

} // namespace

FleetDb::FleetDb(SafetyMargins margins, std::shared_ptr<const PolyMap> map) : margins_(margins), map_(std::move(map))
{
    margins_.validate();
}

void FleetDb::commit(int id, const MincoTrajectory &traj, double tolerance)
{
    std::unique_lock lock(mutex_);
    for (const auto &e : entries_)
    {
        if (e.id == id)
            throw Error(ErrorCode::InvalidArgument, "mission id " + std::to_string(id) + " is already committed");
    }
    const double h = latticeStep(margins_, 0.02);
    for (const auto &e : entries_)
    {
        const auto r = checkEquivalentCriterion(traj, *e.trajectory, margins_, h);
        if (r.worstMargin < -tolerance)
        {
            std::ostringstream os;
            os << "pair (" << id << ", " << e.id << ") violates the reciprocal criterion, worst margin "
               << r.worstMargin << " at t = " << r.worstT;
            throw Error(ErrorCode::AuditFailure, os.str());
        }
    }
    auto ptr = std::make_shared<const MincoTrajectory>(traj);
    entries_.push_back({id, ptr, scaledBox(*ptr, margins_)});
}

std::vector<CommittedTrajectory> FleetDb::snapshot() const
{
    std::shared_lock lock(mutex_);
    return entries_;
}

std::size_t FleetDb::size() const
{
    std::shared_lock lock(mutex_);
    return entries_.size();
}

bool FleetDb::contains(int id) const
{
    std::shared_lock lock(mutex_);
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto &e) { return e.id == id; });
}

PairAudit FleetDb::auditAll(double resolution) const
{
    const auto entries = snapshot();
    PairAudit out;
    for (std::size_t j = 1; j < entries.size(); j++)
    {
        for (std::size_t i = 0; i < j; i++)
        {
            out.pairs++;
            const auto r = checkEquivalentCriterion(*entries[j].trajectory, *entries[i].trajectory, margins_, resolution);
            if (r.worstMargin < out.worstMargin)
            {
                out.worstMargin = r.worstMargin;
                out.first = entries[j].id;
                out.second = entries[i].id;
            }
        }
    }
    return out;
}

std::vector<MissionOutcome> planFleet(FleetDb &db, const PolyMap &map, std::span<const Mission> missions,
                                      const PlannerConfig &cfg, std::uint64_t seed)
{
    std::vector<MissionOutcome> out;
    for (const auto &m : missions)
    {
        MissionOutcome o;
        o.mission = m;
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(m.id)};
        std::mt19937_64 rng(seq);
        try
        {
            const auto fleet = db.snapshot();
            std::vector<const MincoTrajectory *> neighbors;
            for (const auto &e : fleet)
                neighbors.push_back(e.trajectory.get());
            o.plan = planMission(map, neighbors, m, cfg, rng);
            db.commit(m.id, o.plan.trajectory, cfg.checkTolerance);
            o.status = MissionStatus::Committed;
        }
        catch (const Error &e)
        {
            o.status = MissionStatus::Failed;
            o.error = e.code();
            o.message = e.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

TimeWarp TimeWarp::random(double dtMax, double maxRate, std::mt19937_64 &rng)
{
    TimeWarp w;
    if (dtMax <= 0.0)
        return w;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    w.amplitude = dtMax;
    w.omega = maxRate / dtMax * u(rng);
    w.phase = 2.0 * std::numbers::pi * u(rng);
    return w;
}

void DisturbanceSpec::validate() const
{
    if (!(dtMax >= 0.0) || trials < 1 || !(maxRate > 0.0) || !(sampleStep > 0.0))
    {
        throw Error(ErrorCode::InvalidConfig, "invalid disturbance settings");
    }
}

double minPairwiseDistance(std::span<const CommittedTrajectory> fleet, const SafetyMargins &margins,
                           std::span<const TimeWarp> warps, double sampleStep)
{
    if (!(sampleStep > 0.0))
    {
        throw Error(ErrorCode::InvalidArgument, "sample step must be positive");
    }
    if (!warps.empty() && warps.size() != fleet.size())
    {
        throw Error(ErrorCode::InvalidArgument, "one warp per committed trajectory expected");
    }
    const TimeWarp identity;
    auto warp = [&](std::size_t k) -> const TimeWarp & { return warps.empty() ? identity : warps[k]; };
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < fleet.size(); j++)
    {
        const auto &later = *fleet[j].trajectory;
        const TimeWarp &wj = warp(j);
        const double pad = std::abs(wj.amplitude);
        const double t0 = later.startTime() - pad, t1 = later.endTime() + pad;
        const int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / sampleStep)));
        for (std::size_t i = 0; i < j; i++)
        {
            if (boxGap(fleet[i].box, fleet[j].box) >= best)
                continue;
            const auto &earlier = *fleet[i].trajectory;
            const TimeWarp &wi = warp(i);
            for (int k = 0; k <= n; k++)
            {
                const double t = t0 + (t1 - t0) * k / n;
                const double tj = t + wj(t);
                const double ti = t + wi(t);
                if (tj < later.startTime() || tj > later.endTime() || ti < earlier.startTime())
                    continue;
                best = std::min(best, margins.weightedNorm(later.eval(tj, 0) - earlier.eval(ti, 0)));
            }
        }
    }
    return best;
}

std::vector<RobustnessRow> robustnessExperiment(const FleetDb &db, const DisturbanceSpec &spec,
                                                std::span<const double> grid)
{
    spec.validate();
    const auto fleet = db.snapshot();
    std::vector<RobustnessRow> rows;
    for (std::size_t g = 0; g < grid.size(); g++)
    {
        DisturbanceSpec s = spec;
        s.dtMax = grid[g];
        s.validate();
        std::vector<double> values(static_cast<std::size_t>(s.trials));
        auto trial = [&](int k) {
            std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                              static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(k)};
            std::mt19937_64 rng(seq);
            std::vector<TimeWarp> warps(fleet.size());
            if (s.regime == WarpRegime::TwoSided)
            {
                for (auto &w : warps)
                    w = TimeWarp::random(s.dtMax, s.maxRate, rng);
            }
            else if (!fleet.empty())
            {
                const auto pick = std::uniform_int_distribution<std::size_t>(0, fleet.size() - 1)(rng);
                warps[pick] = TimeWarp::random(s.dtMax, s.maxRate, rng);
            }
            values[static_cast<std::size_t>(k)] = minPairwiseDistance(fleet, db.margins(), warps, s.sampleStep);
        };
        const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, s.trials);
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; w++)
        {
            pool.emplace_back([&, w] {
                for (int k = w; k < s.trials; k += workers)
                    trial(k);
            });
        }
        for (auto &t : pool)
            t.join();
        RobustnessRow row;
        row.dtMax = s.dtMax;
        row.trials = s.trials;
        for (double v : values)
            row.mean += v;
        row.mean /= s.trials;
        for (double v : values)
            row.stddev += (v - row.mean) * (v - row.mean);
        row.stddev = s.trials > 1 ? std::sqrt(row.stddev / (s.trials - 1)) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

} // namespace swarmtraj
