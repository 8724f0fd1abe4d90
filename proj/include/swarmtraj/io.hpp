#pragma once

#include "swarmtraj/config.hpp"
#include "swarmtraj/fleet.hpp"
#include "swarmtraj/geom.hpp"
#include "swarmtraj/minco.hpp"

#include <optional>
#include <string>
#include <vector>

namespace swarmtraj::io
{

std::string readFile(const std::string &path);
// Writes to a temporary sibling and renames it over the target.
void writeFileAtomic(const std::string &path, const std::string &content);

// Voxel text ("voxel nx ny nz res ox oy oz" then occupied index triples) or a raw
// point cloud (one "x y z" per line), which needs bounds.
ObstacleMap parseMap(const std::string &text, const std::optional<Aabb> &cloudBounds);
std::string voxelMapText(const ObstacleMap &map);

struct PolyMapMeta
{
    double fillEstimate = -1.0;
    double fillStdError = 0.0;
    std::size_t samples = 0;
    std::size_t seedsAccepted = 0;
};

// Doubles are written as shortest round-trip decimals, so reading back is bit-exact.
std::string polyMapJson(const PolyMap &map, const PolyMapMeta &meta = {});
PolyMap parsePolyMap(const std::string &text, PolyMapMeta *meta = nullptr);

std::string trajectoryJson(const MincoTrajectory &traj, int id = -1);
MincoTrajectory parseTrajectory(const std::string &text, int *id = nullptr);

// id,t_o,ox,oy,oz,fx,fy,fz with an optional header line.
std::vector<Mission> parseMissions(const std::string &text);
std::string missionsCsv(std::span<const Mission> missions);

struct ProfileRow
{
    double t = 0.0;
    double speed = 0.0;
    double tiltDeg = 0.0;
    double omegaNorm = 0.0;
    double thrustNorm = 0.0; // f / m
    double dragNorm = 0.0;   // |drag| / m
};

std::vector<ProfileRow> dynamicProfile(const MincoTrajectory &traj, const VehicleModel &model, double yaw,
                                       double rate);
std::string profileCsv(std::span<const ProfileRow> rows);
std::string robustnessCsv(std::span<const RobustnessRow> rows);

// One row per mission: status, scheduling, timing and the post-check worst values.
std::string metricsCsv(std::span<const MissionOutcome> outcomes);

struct CommitRecord
{
    int id = 0;
    MissionStatus status = MissionStatus::Pending;
    std::string error;
    std::string message;
    bool scheduled = false;
};

// fleet.json (margins, trajectory files in commit order, commit log, audit) next to
// one traj_<id>.json per committed trajectory.
void writeFleetDir(const std::string &dir, const FleetDb &db, std::span<const CommitRecord> log,
                   const PairAudit &audit, double auditResolution);

struct FleetFiles
{
    SafetyMargins margins;
    std::vector<int> ids;
    std::vector<MincoTrajectory> trajectories;
    std::vector<CommitRecord> log;
};

FleetFiles readFleetDir(const std::string &dir);

} // namespace swarmtraj::io
