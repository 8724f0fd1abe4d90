#pragma once

#include "swarmtraj/optimize.hpp"

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

namespace swarmtraj
{

enum class MissionStatus
{
    Pending,
    Committed,
    Failed
};

const char *missionStatusName(MissionStatus s) noexcept;

struct CommittedTrajectory
{
    int id = 0;
    std::shared_ptr<const MincoTrajectory> trajectory;
    Aabb box; // spatial extent in W-scaled coordinates
};

struct PairAudit
{
    double worstMargin = std::numeric_limits<double>::infinity();
    int first = -1;
    int second = -1;
    std::size_t pairs = 0;
};

// Committed trajectories in commit order; readers share, commits are exclusive.
class FleetDb
{
public:
    explicit FleetDb(SafetyMargins margins, std::shared_ptr<const PolyMap> map = nullptr);

    const SafetyMargins &margins() const { return margins_; }
    const std::shared_ptr<const PolyMap> &map() const { return map_; }

    // Audits the candidate against every committed trajectory at latticeStep(margins, 0.02)
    // and inserts it when every margin is at least -tolerance.
    void commit(int id, const MincoTrajectory &traj, double tolerance = 1e-3);

    std::vector<CommittedTrajectory> snapshot() const;
    std::size_t size() const;
    bool contains(int id) const;

    // All pairs, later trajectory checked against the earlier one.
    PairAudit auditAll(double resolution) const;

private:
    SafetyMargins margins_;
    std::shared_ptr<const PolyMap> map_;
    mutable std::shared_mutex mutex_;
    std::vector<CommittedTrajectory> entries_;
};

struct MissionOutcome
{
    Mission mission;
    MissionStatus status = MissionStatus::Pending;
    ErrorCode error = ErrorCode::Ok;
    std::string message;
    PlanResult plan;
};

// Plans and commits the missions in order against the growing fleet; a failure is
// recorded and the batch continues. Each mission draws from its own seeded stream.
std::vector<MissionOutcome> planFleet(FleetDb &db, const PolyMap &map, std::span<const Mission> missions,
                                      const PlannerConfig &cfg, std::uint64_t seed);

// delta(t) = amplitude sin(omega t + phase)
struct TimeWarp
{
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;

    double operator()(double t) const { return amplitude * std::sin(omega * t + phase); }
    static TimeWarp random(double dtMax, double maxRate, std::mt19937_64 &rng);
};

enum class WarpRegime
{
    OneSided, // a single randomly chosen vehicle is warped per trial
    TwoSided  // every vehicle is warped independently
};

struct DisturbanceSpec
{
    double dtMax = 0.0;
    int trials = 10;
    WarpRegime regime = WarpRegime::TwoSided;
    double maxRate = 0.5;
    double sampleStep = 0.02;
    std::uint64_t seed = 1;

    void validate() const;
};

// Min over pairs of the W-distance between warped positions, sampled over the active
// window of the later-committed vehicle, which is absent before its departure.
// Warps are indexed like the snapshot; an empty span is the identity.
// Returns +inf when there is no pair.
double minPairwiseDistance(std::span<const CommittedTrajectory> fleet, const SafetyMargins &margins,
                           std::span<const TimeWarp> warps, double sampleStep);

struct RobustnessRow
{
    double dtMax = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    int trials = 0;
};

std::vector<RobustnessRow> robustnessExperiment(const FleetDb &db, const DisturbanceSpec &spec,
                                                std::span<const double> grid);

} // namespace swarmtraj
