#include "helpers.hpp"

#include <doctest.h>

#include "swarmtraj/config.hpp"
#include "swarmtraj/io.hpp"
#include "swarmtraj/scenarios.hpp"

#include <filesystem>

using namespace swarmtraj;
using testutil::uniform;
using testutil::uniformVec;

namespace fs = std::filesystem;

namespace
{

fs::path scratchDir(const char *name)
{
    const fs::path d = fs::temp_directory_path() / (std::string("swarmtraj_io_") + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

MincoTrajectory randomTrajectory(std::mt19937_64 &rng)
{
    const int pieces = 1 + static_cast<int>(rng() % 5);
    Eigen::Matrix3Xd q(3, pieces - 1);
    for (int i = 0; i < pieces - 1; i++)
        q.col(i) = uniformVec(rng, -20, 20);
    Eigen::VectorXd T(pieces);
    for (int i = 0; i < pieces; i++)
        T(i) = uniform(rng, 0.3, 4.0);
    BoundaryState bd = BoundaryState::hover(uniformVec(rng, -20, 20), uniformVec(rng, -20, 20));
    bd.head.col(1) = uniformVec(rng, -2, 2);
    bd.tail.col(2) = uniformVec(rng, -1, 1);
    return MincoTrajectory::construct(q, T, bd, uniform(rng, -5, 50));
}

} // namespace

TEST_CASE("trajectory json round trip is bit exact")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; trial++)
    {
        const auto a = randomTrajectory(rng);
        int id = -7;
        const auto b = io::parseTrajectory(io::trajectoryJson(a, trial), &id);
        CHECK(id == trial);
        CHECK(b.startTime() == a.startTime());
        CHECK(b.durations() == a.durations());
        CHECK(b.coeffs() == a.coeffs());
        CHECK(b.boundary().head == a.boundary().head);
        CHECK(b.boundary().tail == a.boundary().tail);
        const double t = a.startTime() + uniform(rng, 0, a.totalDuration());
        CHECK(b.eval(t, 2) == a.eval(t, 2));
    }
}

TEST_CASE("malformed trajectory documents raise io errors")
{
    for (const char *doc : {"{", "{\"t0\":0}", "{\"t0\":0,\"pieces\":[]}",
                            "{\"t0\":0,\"pieces\":[{\"duration\":1,\"coeffs\":[[0,0,0]]}]}"})
    {
        try
        {
            io::parseTrajectory(doc);
            FAIL("accepted " << doc);
        }
        catch (const Error &e)
        {
            CHECK(e.code() == ErrorCode::Io);
        }
    }
}

TEST_CASE("polymap json round trip keeps polytopes and queries")
{
    std::mt19937_64 rng(5);
    std::vector<HalfspacePolytope> polys;
    for (int k = 0; k < 6; k++)
        polys.push_back(testutil::randomPolytope(rng, 8, Vec3(2.0 * k, uniform(rng, -1, 1), 0)));
    const PolyMap a(polys, 1e-3, Aabb(Vec3(-5, -5, -5), Vec3(15, 5, 5)));
    io::PolyMapMeta meta{0.97, 0.004, 1000, 6};
    io::PolyMapMeta back;
    const auto b = io::parsePolyMap(io::polyMapJson(a, meta), &back);
    REQUIRE(b.size() == a.size());
    CHECK(b.epsilon() == a.epsilon());
    CHECK(b.bounds().lo == a.bounds().lo);
    CHECK(b.bounds().hi == a.bounds().hi);
    CHECK(back.fillEstimate == meta.fillEstimate);
    CHECK(back.samples == meta.samples);
    for (std::size_t k = 0; k < a.size(); k++)
    {
        CHECK(b.polytopes()[k].normals == a.polytopes()[k].normals);
        CHECK(b.polytopes()[k].offsets == a.polytopes()[k].offsets);
        CHECK(b.polytopes()[k].interior == a.polytopes()[k].interior);
    }
    for (int trial = 0; trial < 200; trial++)
    {
        const Vec3 x = uniformVec(rng, -4, 14);
        CHECK(b.stabAll(x) == a.stabAll(x));
    }
}

TEST_CASE("voxel map text round trip")
{
    const auto a = scenarios::twoRooms();
    const auto b = io::parseMap(io::voxelMapText(a), std::nullopt);
    REQUIRE(b.kind() == ObstacleMap::Kind::VoxelGrid);
    CHECK(b.dims() == a.dims());
    CHECK(b.origin() == a.origin());
    CHECK(b.resolution() == a.resolution());
    CHECK(b.obstacleCount() == a.obstacleCount());
    const auto d = a.dims();
    int mismatches = 0;
    for (int k = 0; k < d(2); k++)
        for (int j = 0; j < d(1); j++)
            for (int i = 0; i < d(0); i++)
                mismatches += a.occupied(i, j, k) != b.occupied(i, j, k);
    CHECK(mismatches == 0);
}

TEST_CASE("map parsing of clouds and bad input")
{
    const std::string cloud = "# two points\n1 2 3\n\n4 5 6\n";
    CHECK_THROWS_AS(io::parseMap(cloud, std::nullopt), Error);
    const auto m = io::parseMap(cloud, Aabb(Vec3::Zero(), Vec3::Constant(10)));
    CHECK(m.kind() == ObstacleMap::Kind::PointCloud);
    CHECK(m.obstacleCount() == 2);
    CHECK_THROWS_AS(io::parseMap("voxel 2 2 2 0.5 0 0 0\n2 0 0\n", std::nullopt), Error);
    CHECK_THROWS_AS(io::parseMap("voxel 2 2 0.5 0 0 0\n", std::nullopt), Error);
    CHECK_THROWS_AS(io::parseMap("1 2 x\n", Aabb(Vec3::Zero(), Vec3::Constant(10))), Error);
}

TEST_CASE("mission csv")
{
    const auto ms = io::parseMissions("id,t_o,ox,oy,oz,fx,fy,fz\n3,1.5,0,1,2,10,11,12\r\n# note\n4,0,1,1,1,2,2,2\n");
    REQUIRE(ms.size() == 2);
    CHECK(ms[0].id == 3);
    CHECK(ms[0].requestTime == 1.5);
    CHECK(ms[0].goal == Vec3(10, 11, 12));
    const auto again = io::parseMissions(io::missionsCsv(ms));
    REQUIRE(again.size() == 2);
    CHECK(again[1].start == ms[1].start);
    CHECK_THROWS_AS(io::parseMissions("1,0,0,0,0,1,1\n"), Error);
    CHECK_THROWS_AS(io::parseMissions("1,0,0,0,0,1,1,q\n"), Error);
    CHECK_THROWS_AS(io::parseMissions("1,0,0,0,0,1,1,1\n1,0,0,0,0,1,1,1\n"), Error);
    CHECK_THROWS_AS(io::parseMissions("1.5,0,0,0,0,1,1,1\n"), Error);
}

TEST_CASE("profile of a hover holds gravity thrust and zero tilt")
{
    const Vec3 p(1, 2, 3);
    const auto hover = MincoTrajectory::construct(Eigen::Matrix3Xd(3, 0), Eigen::VectorXd::Constant(1, 2.0),
                                                  BoundaryState::hover(p, p), 4.0);
    VehicleModel model;
    const auto rows = io::dynamicProfile(hover, model, 0.3, 10.0);
    REQUIRE(rows.size() == 21);
    for (std::size_t k = 0; k < rows.size(); k++)
    {
        CHECK(rows[k].t == doctest::Approx(4.0 + 0.1 * static_cast<double>(k)).epsilon(1e-12));
        CHECK(rows[k].thrustNorm == doctest::Approx(model.gravity).epsilon(1e-9));
        CHECK(std::abs(rows[k].tiltDeg) < 1e-6);
        CHECK(rows[k].speed == doctest::Approx(0.0).scale(1e-12));
        CHECK(rows[k].omegaNorm == doctest::Approx(0.0).scale(1e-9));
        CHECK(rows[k].dragNorm == doctest::Approx(0.0).scale(1e-6));
    }
    const auto csv = io::profileCsv(rows);
    CHECK(csv.rfind("t,speed,tilt_deg,omega_norm,thrust_norm,drag_norm\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);
}

TEST_CASE("profile of a straight run matches the tilt of the thrust direction")
{
    // no drag: thrust direction is a + g e3, so tilt follows from the acceleration alone
    const auto traj = MincoTrajectory::construct(Eigen::Matrix3Xd(3, 0), Eigen::VectorXd::Constant(1, 5.0),
                                                 BoundaryState::hover(Vec3(0, 0, 0), Vec3(20, 0, 0)), 0.0);
    VehicleModel model;
    model.dragH = model.dragV = 0.0;
    model.parasitic = 0.0;
    for (const auto &r : io::dynamicProfile(traj, model, 0.0, 20.0))
    {
        const Vec3 a = traj.eval(r.t, 2) + Vec3(0, 0, model.gravity);
        CHECK(r.thrustNorm == doctest::Approx(a.norm()).epsilon(1e-9));
        CHECK(r.tiltDeg == doctest::Approx(std::atan2(std::abs(a.x()), a.z()) * 180.0 / M_PI).epsilon(1e-7));
        CHECK(r.speed == doctest::Approx(traj.eval(r.t, 1).norm()).epsilon(1e-12));
    }
}

TEST_CASE("fleet directory round trip")
{
    SafetyMargins m;
    m.radius = 1.0;
    m.temporal = 1.0;
    m.vertical = 0.5;
    FleetDb db(m);
    for (int k = 0; k < 3; k++)
        db.commit(10 + k, MincoTrajectory::construct(Eigen::Matrix3Xd(3, 0), Eigen::VectorXd::Constant(1, 6.0),
                                                     BoundaryState::hover(Vec3(0, 8.0 * k, 0), Vec3(30, 8.0 * k, 0)),
                                                     0.0));
    std::vector<io::CommitRecord> log{{10, MissionStatus::Committed, "", "", false},
                                      {11, MissionStatus::Committed, "", "", true},
                                      {12, MissionStatus::Committed, "", "", false},
                                      {13, MissionStatus::Failed, "NoPath", "nothing", false}};
    const auto audit = db.auditAll(0.02);
    const auto dir = scratchDir("fleet");
    io::writeFleetDir(dir.string(), db, log, audit, 0.02);
    const auto files = io::readFleetDir(dir.string());
    CHECK(files.margins.radius == 1.0);
    CHECK(files.ids == std::vector<int>{10, 11, 12});
    REQUIRE(files.trajectories.size() == 3);
    CHECK(files.trajectories[2].coeffs() == db.snapshot()[2].trajectory->coeffs());
    REQUIRE(files.log.size() == 4);
    CHECK(files.log[1].scheduled);
    CHECK(files.log[3].status == MissionStatus::Failed);
    CHECK(files.log[3].error == "NoPath");
    // a second write with identical content produces identical bytes
    const auto first = io::readFile((dir / "fleet.json").string());
    io::writeFleetDir(dir.string(), db, log, audit, 0.02);
    CHECK(io::readFile((dir / "fleet.json").string()) == first);
    CHECK_FALSE(fs::exists(dir / "fleet.json.tmp"));
    fs::remove_all(dir);
}

TEST_CASE("config defaults survive a dump and parse")
{
    const auto a = RunConfig::defaults();
    const auto text = dumpRunConfig(a);
    const auto b = parseRunConfig(text);
    CHECK(dumpRunConfig(b) == text);
    CHECK(b.planner.margins.radius == 15.0);
    CHECK(b.planner.model.mass == 1.9);
    CHECK(b.planner.limits.vMax == 13.0);
}

TEST_CASE("config rejects unknown keys and bad values")
{
    auto expectConfigError = [](const std::string &doc, const std::string &needle) {
        try
        {
            parseRunConfig(doc);
            FAIL("accepted " << doc);
        }
        catch (const Error &e)
        {
            CHECK(e.code() == ErrorCode::InvalidConfig);
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
        }
    };
    expectConfigError(R"({"margins": {"radius": 2, "radiuss": 3}})", "margins.radiuss");
    expectConfigError(R"({"bogus": 1})", "bogus");
    expectConfigError(R"({"margins": {"radius": -1}})", "M_r");
    expectConfigError(R"({"robustness": {"regime": "sideways"}})", "regime");
    const auto c = parseRunConfig(R"({"margins": {"radius": 2.5}, "seed": 9})");
    CHECK(c.planner.margins.radius == 2.5);
    CHECK(c.planner.margins.temporal == 4.0);
    CHECK(c.seed == 9);
}
