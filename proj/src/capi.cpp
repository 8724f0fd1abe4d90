#include "swarmtraj/swarmtraj_c.h"

#include "swarmtraj/config.hpp"
#include "swarmtraj/fleet.hpp"
#include "swarmtraj/io.hpp"

#include <filesystem>
#include <limits>
#include <memory>
#include <new>

using namespace swarmtraj;

struct st_config
{
    RunConfig cfg;
};

struct st_polymap
{
    PolyMap map;
    io::PolyMapMeta meta;
};

struct st_fleet
{
    std::unique_ptr<FleetDb> db;
    std::vector<io::CommitRecord> log;
    std::string metrics; // empty when loaded from a directory without one
};

struct st_trajectory
{
    MincoTrajectory traj;
    int id = -1;
};

static_assert(static_cast<int>(ErrorCode::AuditFailure) == ST_AUDIT_FAILURE);

namespace
{

thread_local std::string lastError;

template <class F> int guarded(F &&f)
{
    try
    {
        f();
        lastError.clear();
        return ST_OK;
    }
    catch (const Error &e)
    {
        lastError = e.what();
        return static_cast<int>(e.code());
    }
    catch (const std::bad_alloc &)
    {
        lastError = "out of memory";
        return ST_INTERNAL;
    }
    catch (const std::exception &e)
    {
        lastError = e.what();
        return ST_INTERNAL;
    }
}

void require(bool ok, const char *what)
{
    if (!ok)
        throw Error(ErrorCode::InvalidArgument, what);
}

}

extern "C" {

const char *st_last_error(void)
{
    return lastError.c_str();
}

const char *st_status_name(int status)
{
    if (status == ST_INTERNAL)
        return "Internal";
    if (status < 0 || status > ST_AUDIT_FAILURE)
        return "Unknown";
    return errorName(static_cast<ErrorCode>(status));
}

int st_config_default(st_config **out)
{
    return guarded([&] {
        require(out, "null output handle");
        *out = new st_config{RunConfig::defaults()};
    });
}

int st_config_load(const char *path, st_config **out)
{
    return guarded([&] {
        require(path && out, "null argument");
        *out = new st_config{loadRunConfig(path)};
    });
}

int st_config_save(const st_config *cfg, const char *path)
{
    return guarded([&] {
        require(cfg && path, "null argument");
        io::writeFileAtomic(path, dumpRunConfig(cfg->cfg));
    });
}

void st_config_free(st_config *cfg)
{
    delete cfg;
}

uint64_t st_config_seed(const st_config *cfg)
{
    return cfg ? cfg->cfg.seed : 0;
}

int st_config_set_seed(st_config *cfg, uint64_t seed)
{
    return guarded([&] {
        require(cfg, "null config");
        cfg->cfg.seed = seed;
    });
}

int st_config_set_distance_only(st_config *cfg)
{
    return guarded([&] {
        require(cfg, "null config");
        cfg->cfg.planner.margins.temporal = 0.0;
    });
}

int st_config_set_robustness(st_config *cfg, const double *grid, size_t n, int trials)
{
    return guarded([&] {
        require(cfg, "null config");
        auto r = cfg->cfg.robustness;
        if (grid && n > 0)
            r.grid.assign(grid, grid + n);
        if (trials > 0)
            r.trials = trials;
        RunConfig probe = cfg->cfg;
        probe.robustness = r;
        probe.validate();
        cfg->cfg.robustness = r;
    });
}

double st_config_radius(const st_config *cfg)
{
    return cfg ? cfg->cfg.planner.margins.radius : std::numeric_limits<double>::quiet_NaN();
}

double st_config_temporal(const st_config *cfg)
{
    return cfg ? cfg->cfg.planner.margins.temporal : std::numeric_limits<double>::quiet_NaN();
}

int st_polyhedronize(const st_config *cfg, const char *map_path, st_polymap **out)
{
    return guarded([&] {
        require(cfg && map_path && out, "null argument");
        const auto &c = cfg->cfg;
        const ObstacleMap obstacles = io::parseMap(io::readFile(map_path), c.cloudBounds);
        std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32), 0u};
        std::mt19937_64 rng(seq);
        PolyhedronizeStats stats;
        auto result = std::make_unique<st_polymap>();
        result->map = polyhedronize(obstacles, c.polyhedronize, rng, &stats);
        std::seed_seq fillSeq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32), 1u};
        std::mt19937_64 fillRng(fillSeq);
        const auto fill = estimateFill(result->map, obstacles, 10000, fillRng);
        result->meta = {fill.fraction, fill.stdError, fill.samples, stats.seedsAccepted};
        *out = result.release();
    });
}

int st_polymap_load(const char *path, st_polymap **out)
{
    return guarded([&] {
        require(path && out, "null argument");
        auto result = std::make_unique<st_polymap>();
        result->map = io::parsePolyMap(io::readFile(path), &result->meta);
        *out = result.release();
    });
}

int st_polymap_save(const st_polymap *map, const char *path)
{
    return guarded([&] {
        require(map && path, "null argument");
        io::writeFileAtomic(path, io::polyMapJson(map->map, map->meta));
    });
}

size_t st_polymap_size(const st_polymap *map)
{
    return map ? map->map.size() : 0;
}

double st_polymap_fill(const st_polymap *map, double *std_error)
{
    if (!map)
        return -1.0;
    if (std_error)
        *std_error = map->meta.fillStdError;
    return map->meta.fillEstimate;
}

void st_polymap_free(st_polymap *map)
{
    delete map;
}

int st_fleet_plan(const st_config *cfg, const st_polymap *map, const char *missions_path, st_fleet **out)
{
    return guarded([&] {
        require(cfg && map && missions_path && out, "null argument");
        const auto &c = cfg->cfg;
        const auto missions = io::parseMissions(io::readFile(missions_path));
        auto result = std::make_unique<st_fleet>();
        result->db = std::make_unique<FleetDb>(c.planner.margins);
        const auto outcomes = planFleet(*result->db, map->map, missions, c.planner, c.seed);
        for (const auto &o : outcomes)
            result->log.push_back({o.mission.id, o.status, o.status == MissionStatus::Failed ? errorName(o.error) : "",
                                   o.message, o.plan.scheduled});
        result->metrics = io::metricsCsv(outcomes);
        *out = result.release();
    });
}

int st_fleet_load(const char *dir, st_fleet **out)
{
    return guarded([&] {
        require(dir && out, "null argument");
        auto files = io::readFleetDir(dir);
        auto result = std::make_unique<st_fleet>();
        result->db = std::make_unique<FleetDb>(files.margins);
        for (std::size_t k = 0; k < files.ids.size(); k++)
            result->db->commit(files.ids[k], files.trajectories[k], std::numeric_limits<double>::infinity());
        result->log = std::move(files.log);
        const auto metrics = std::filesystem::path(dir) / "metrics.csv";
        if (std::filesystem::exists(metrics))
            result->metrics = io::readFile(metrics.string());
        *out = result.release();
    });
}

int st_fleet_save(const st_fleet *fleet, const char *dir)
{
    return guarded([&] {
        require(fleet && dir, "null argument");
        const double h = latticeStep(fleet->db->margins(), 0.01);
        io::writeFleetDir(dir, *fleet->db, fleet->log, fleet->db->auditAll(h), h);
        if (!fleet->metrics.empty())
            io::writeFileAtomic((std::filesystem::path(dir) / "metrics.csv").string(), fleet->metrics);
    });
}

size_t st_fleet_size(const st_fleet *fleet)
{
    return fleet ? fleet->db->size() : 0;
}

size_t st_fleet_mission_count(const st_fleet *fleet)
{
    return fleet ? fleet->log.size() : 0;
}

int st_fleet_mission(const st_fleet *fleet, size_t index, st_mission_info *out)
{
    return guarded([&] {
        require(fleet && out, "null argument");
        require(index < fleet->log.size(), "mission index out of range");
        const auto &r = fleet->log[index];
        int error = ST_OK;
        for (int c = 1; c <= ST_AUDIT_FAILURE; c++)
            if (r.error == errorName(static_cast<ErrorCode>(c)))
                error = c;
        *out = {r.id, static_cast<int>(r.status), error, r.scheduled ? 1 : 0};
    });
}

const char *st_fleet_mission_message(const st_fleet *fleet, size_t index)
{
    if (!fleet || index >= fleet->log.size())
        return "";
    return fleet->log[index].message.c_str();
}

int st_fleet_audit(const st_fleet *fleet, st_audit *out)
{
    return guarded([&] {
        require(fleet && out, "null argument");
        const auto a = fleet->db->auditAll(latticeStep(fleet->db->margins(), 0.01));
        *out = {a.worstMargin, a.first, a.second, a.pairs};
    });
}

int st_fleet_trajectory(const st_fleet *fleet, size_t index, st_trajectory **out)
{
    return guarded([&] {
        require(fleet && out, "null argument");
        const auto snap = fleet->db->snapshot();
        require(index < snap.size(), "trajectory index out of range");
        *out = new st_trajectory{*snap[index].trajectory, snap[index].id};
    });
}

double st_fleet_radius(const st_fleet *fleet)
{
    return fleet ? fleet->db->margins().radius : std::numeric_limits<double>::quiet_NaN();
}

int st_fleet_robustness(const st_fleet *fleet, const st_config *cfg, const char *csv_path)
{
    return guarded([&] {
        require(fleet && cfg && csv_path, "null argument");
        const auto &r = cfg->cfg.robustness;
        DisturbanceSpec spec;
        spec.trials = r.trials;
        spec.regime = r.regime;
        spec.maxRate = r.maxRate;
        spec.sampleStep = r.sampleStep;
        spec.seed = cfg->cfg.seed;
        const auto rows = robustnessExperiment(*fleet->db, spec, r.grid);
        io::writeFileAtomic(csv_path, io::robustnessCsv(rows));
    });
}

void st_fleet_free(st_fleet *fleet)
{
    delete fleet;
}

int st_trajectory_load(const char *path, st_trajectory **out)
{
    return guarded([&] {
        require(path && out, "null argument");
        int id = -1;
        auto traj = io::parseTrajectory(io::readFile(path), &id);
        *out = new st_trajectory{std::move(traj), id};
    });
}

int st_trajectory_save(const st_trajectory *traj, const char *path)
{
    return guarded([&] {
        require(traj && path, "null argument");
        io::writeFileAtomic(path, io::trajectoryJson(traj->traj, traj->id));
    });
}

int st_trajectory_id(const st_trajectory *traj)
{
    return traj ? traj->id : -1;
}

double st_trajectory_start(const st_trajectory *traj)
{
    return traj ? traj->traj.startTime() : std::numeric_limits<double>::quiet_NaN();
}

double st_trajectory_duration(const st_trajectory *traj)
{
    return traj ? traj->traj.totalDuration() : std::numeric_limits<double>::quiet_NaN();
}

int st_trajectory_shift(st_trajectory *traj, double dt)
{
    return guarded([&] {
        require(traj, "null trajectory");
        const auto &t = traj->traj;
        traj->traj = MincoTrajectory::fromCoefficients(t.coeffs(), t.durations(), t.boundary(), t.startTime() + dt);
    });
}

void st_trajectory_free(st_trajectory *traj)
{
    delete traj;
}

int st_check(const st_config *cfg, const st_polymap *map, const st_trajectory *const *trajs, size_t n,
             st_check_report *out)
{
    return guarded([&] {
        require(cfg && out && (trajs || n == 0), "null argument");
        const auto &p = cfg->cfg.planner;
        const double h = latticeStep(p.margins, 0.01);
        st_check_report rep{std::numeric_limits<double>::infinity(), -1, std::numeric_limits<double>::infinity(), -1,
                            -1, -std::numeric_limits<double>::infinity(), -1, 0};
        std::vector<const MincoTrajectory *> earlier;
        for (size_t k = 0; k < n; k++)
        {
            require(trajs[k], "null trajectory");
            const auto &traj = trajs[k]->traj;
            const int id = trajs[k]->id >= 0 ? trajs[k]->id : static_cast<int>(k);
            CheckReport c;
            if (map)
                c = checkContainment(traj, map->map, p.checkStep);
            checkNeighbors(c, traj, earlier, p.margins, h);
            checkLimits(c, traj, p.model, p.limits, p.yaw, p.checkStep);
            if (c.containment < rep.containment)
            {
                rep.containment = c.containment;
                rep.containment_index = id;
            }
            if (c.worstNeighbor >= 0 && c.criterion < rep.criterion)
            {
                rep.criterion = c.criterion;
                rep.first = id;
                const auto *other = trajs[static_cast<size_t>(c.worstNeighbor)];
                rep.second = other->id >= 0 ? other->id : c.worstNeighbor;
            }
            if (c.limits > rep.limits)
            {
                rep.limits = c.limits;
                rep.limits_index = id;
            }
            earlier.push_back(&traj);
        }
        const double tol = p.checkTolerance;
        rep.pass = rep.containment >= -tol && rep.criterion >= -tol && rep.limits <= tol;
        *out = rep;
    });
}

int st_profile(const st_config *cfg, const st_trajectory *traj, const char *csv_path)
{
    return guarded([&] {
        require(cfg && traj && csv_path, "null argument");
        const auto &c = cfg->cfg;
        const auto rows = io::dynamicProfile(traj->traj, c.planner.model, c.planner.yaw, c.profileRate);
        io::writeFileAtomic(csv_path, io::profileCsv(rows));
    });
}

}
