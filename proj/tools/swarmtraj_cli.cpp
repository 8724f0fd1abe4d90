#include "swarmtraj/swarmtraj_c.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace
{

constexpr int kExitUsage = 1;
constexpr int kExitPlanning = 2;
constexpr int kExitAudit = 3;
constexpr double kTolerance = 1e-3;

struct Common
{
    std::string config;
    std::optional<uint64_t> seed;
    std::string out = ".";
};

template <class T, void (*Free)(T *)> struct Deleter
{
    void operator()(T *p) const { Free(p); }
};
using Config = std::unique_ptr<st_config, Deleter<st_config, st_config_free>>;
using Polymap = std::unique_ptr<st_polymap, Deleter<st_polymap, st_polymap_free>>;
using Fleet = std::unique_ptr<st_fleet, Deleter<st_fleet, st_fleet_free>>;
using Trajectory = std::unique_ptr<st_trajectory, Deleter<st_trajectory, st_trajectory_free>>;

struct Failure
{
    int status;
};

int exitCode(int status)
{
    switch (status)
    {
    case ST_OK: return 0;
    case ST_INVALID_ARGUMENT:
    case ST_IO:
    case ST_INVALID_CONFIG: return kExitUsage;
    case ST_AUDIT_FAILURE: return kExitAudit;
    default: return kExitPlanning;
    }
}

void ok(int status)
{
    if (status != ST_OK)
    {
        std::fprintf(stderr, "error: %s\n", st_last_error());
        throw Failure{status};
    }
}

Config loadConfig(const Common &c)
{
    st_config *raw = nullptr;
    ok(c.config.empty() ? st_config_default(&raw) : st_config_load(c.config.c_str(), &raw));
    Config cfg(raw);
    if (c.seed)
        ok(st_config_set_seed(cfg.get(), *c.seed));
    return cfg;
}

std::string outPath(const Common &c, const std::string &name)
{
    fs::create_directories(c.out);
    return (fs::path(c.out) / name).string();
}

Trajectory loadTrajectory(const std::string &path)
{
    st_trajectory *raw = nullptr;
    ok(st_trajectory_load(path.c_str(), &raw));
    return Trajectory(raw);
}

Fleet loadFleet(const std::string &dir)
{
    st_fleet *raw = nullptr;
    ok(st_fleet_load(dir.c_str(), &raw));
    return Fleet(raw);
}

void addCommon(CLI::App *cmd, Common &c)
{
    cmd->add_option("--config", c.config, "JSON run configuration (defaults when omitted)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "random seed, overrides the config");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
}

int runPolyhedronize(const Common &c, const std::string &map)
{
    auto cfg = loadConfig(c);
    st_polymap *raw = nullptr;
    ok(st_polyhedronize(cfg.get(), map.c_str(), &raw));
    Polymap pm(raw);
    const auto path = outPath(c, "polymap.json");
    ok(st_polymap_save(pm.get(), path.c_str()));
    double se = 0.0;
    const double fill = st_polymap_fill(pm.get(), &se);
    std::printf("polytopes %zu\nfill %.6f +- %.6f\nwrote %s\n", st_polymap_size(pm.get()), fill, se, path.c_str());
    return 0;
}

int runFleet(const Common &c, const std::string &polymap, const std::string &missions, bool distanceOnly)
{
    auto cfg = loadConfig(c);
    if (distanceOnly)
        ok(st_config_set_distance_only(cfg.get()));
    st_polymap *rawMap = nullptr;
    ok(st_polymap_load(polymap.c_str(), &rawMap));
    Polymap pm(rawMap);
    st_fleet *rawFleet = nullptr;
    ok(st_fleet_plan(cfg.get(), pm.get(), missions.c_str(), &rawFleet));
    Fleet fleet(rawFleet);
    fs::create_directories(c.out);
    ok(st_fleet_save(fleet.get(), c.out.c_str()));

    const size_t n = st_fleet_mission_count(fleet.get());
    for (size_t k = 0; k < n; k++)
    {
        st_mission_info info{};
        ok(st_fleet_mission(fleet.get(), k, &info));
        if (info.status == 1)
            std::printf("mission %d committed%s\n", info.id, info.scheduled ? " (scheduled)" : "");
        else
            std::printf("mission %d failed, %s\n", info.id, st_fleet_mission_message(fleet.get(), k));
    }
    st_audit audit{};
    ok(st_fleet_audit(fleet.get(), &audit));
    std::printf("committed %zu of %zu\n", st_fleet_size(fleet.get()), n);
    if (audit.pairs == 0)
    {
        std::printf("audit no pairs\n");
        return 0;
    }
    std::printf("audit worst %.6g over %zu pairs, pair (%d, %d)\n", audit.worst_margin, audit.pairs, audit.first,
                audit.second);
    if (audit.worst_margin < -kTolerance)
    {
        std::fprintf(stderr, "audit failed for pair (%d, %d)\n", audit.first, audit.second);
        return kExitAudit;
    }
    return 0;
}

int runCheck(const Common &c, const std::vector<std::string> &inputs, const std::string &polymap)
{
    auto cfg = loadConfig(c);
    Polymap pm;
    if (!polymap.empty())
    {
        st_polymap *raw = nullptr;
        ok(st_polymap_load(polymap.c_str(), &raw));
        pm.reset(raw);
    }
    std::vector<Trajectory> trajs;
    for (const auto &in : inputs)
    {
        if (fs::is_directory(in))
        {
            auto fleet = loadFleet(in);
            for (size_t k = 0; k < st_fleet_size(fleet.get()); k++)
            {
                st_trajectory *raw = nullptr;
                ok(st_fleet_trajectory(fleet.get(), k, &raw));
                trajs.emplace_back(raw);
            }
        }
        else
            trajs.push_back(loadTrajectory(in));
    }
    std::vector<const st_trajectory *> view;
    for (const auto &t : trajs)
        view.push_back(t.get());
    st_check_report rep{};
    ok(st_check(cfg.get(), pm.get(), view.data(), view.size(), &rep));

    std::string text;
    char line[256];
    if (pm)
        std::snprintf(line, sizeof(line), "containment %.6g trajectory %d\n", rep.containment, rep.containment_index);
    else
        std::snprintf(line, sizeof(line), "containment skipped, no polymap\n");
    text += line;
    if (rep.first >= 0)
        std::snprintf(line, sizeof(line), "criterion %.6g pair (%d, %d)\n", rep.criterion, rep.first, rep.second);
    else
        std::snprintf(line, sizeof(line), "criterion no pairs\n");
    text += line;
    std::snprintf(line, sizeof(line), "limits %.6g trajectory %d\n", rep.limits, rep.limits_index);
    text += line;
    text += rep.pass ? "verdict pass\n" : "verdict fail\n";
    std::fputs(text.c_str(), stdout);
    if (!rep.pass)
    {
        if (rep.first >= 0 && rep.criterion < -kTolerance)
            std::fprintf(stderr, "violated pair (%d, %d)\n", rep.first, rep.second);
        return kExitAudit;
    }
    return 0;
}

std::string stem(const std::string &path)
{
    fs::path p(path);
    if (!p.has_filename())
        p = p.parent_path();
    return p.stem().string();
}

int runRobustness(const Common &c, const std::vector<std::string> &dirs, const std::vector<double> &grid, int trials)
{
    auto cfg = loadConfig(c);
    ok(st_config_set_robustness(cfg.get(), grid.data(), grid.size(), trials));
    for (const auto &dir : dirs)
    {
        auto fleet = loadFleet(dir);
        const auto path = outPath(c, "robustness_" + stem(dir) + ".csv");
        ok(st_fleet_robustness(fleet.get(), cfg.get(), path.c_str()));
        std::printf("wrote %s (%zu vehicles, 2 M_r = %.6g)\n", path.c_str(), st_fleet_size(fleet.get()),
                    2.0 * st_fleet_radius(fleet.get()));
    }
    return 0;
}

int runProfile(const Common &c, const std::vector<std::string> &files)
{
    auto cfg = loadConfig(c);
    for (const auto &f : files)
    {
        auto traj = loadTrajectory(f);
        const auto path = outPath(c, "profile_" + stem(f) + ".csv");
        ok(st_profile(cfg.get(), traj.get(), path.c_str()));
        std::printf("wrote %s\n", path.c_str());
    }
    return 0;
}

}

int main(int argc, char **argv)
{
    CLI::App app{"multi-vehicle trajectory planning toolkit"};
    app.require_subcommand(1);
    Common common;

    auto *poly = app.add_subcommand("polyhedronize", "cover the free space of a map with convex polytopes");
    std::string mapFile;
    poly->add_option("map", mapFile, "voxel or point-cloud map")->required()->check(CLI::ExistingFile);
    addCommon(poly, common);

    auto *fleet = app.add_subcommand("fleet", "plan missions in order against the growing fleet");
    std::string polymapFile, missionsFile;
    bool distanceOnly = false;
    fleet->add_option("polymap", polymapFile, "polymap.json")->required()->check(CLI::ExistingFile);
    fleet->add_option("missions", missionsFile, "missions CSV")->required()->check(CLI::ExistingFile);
    fleet->add_flag("--distance-only", distanceOnly, "separate vehicles by distance only (M_d = 0)");
    addCommon(fleet, common);

    auto *check = app.add_subcommand("check", "dense audit of containment, pairwise margins and limits");
    std::vector<std::string> checkInputs;
    std::string checkPolymap;
    check->add_option("inputs", checkInputs, "trajectory files or fleet directories")->required()->check(
        CLI::ExistingPath);
    check->add_option("--polymap", checkPolymap, "polymap for the containment check")->check(CLI::ExistingFile);
    addCommon(check, common);

    auto *robust = app.add_subcommand("robustness", "minimum distances under random time warps");
    std::vector<std::string> fleetDirs;
    std::vector<double> grid;
    int trials = 0;
    robust->add_option("fleets", fleetDirs, "fleet directories")->required()->check(CLI::ExistingDirectory);
    robust->add_option("--grid", grid, "dt_max values, comma separated")->delimiter(',');
    robust->add_option("--trials", trials, "trials per grid point")->check(CLI::PositiveNumber);
    addCommon(robust, common);

    auto *profile = app.add_subcommand("profile", "speed, tilt, rates, thrust and drag along a trajectory");
    std::vector<std::string> profileFiles;
    profile->add_option("trajectories", profileFiles, "trajectory files")->required()->check(CLI::ExistingFile);
    addCommon(profile, common);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try
    {
        if (poly->parsed())
            return runPolyhedronize(common, mapFile);
        if (fleet->parsed())
            return runFleet(common, polymapFile, missionsFile, distanceOnly);
        if (check->parsed())
            return runCheck(common, checkInputs, checkPolymap);
        if (robust->parsed())
            return runRobustness(common, fleetDirs, grid, trials);
        if (profile->parsed())
            return runProfile(common, profileFiles);
    }
    catch (const Failure &f)
    {
        return exitCode(f.status);
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
