#include "swarmtraj/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace swarmtraj::io
{

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace
{

std::string num(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

json vec(const Vec3 &v)
{
    return json::array({v(0), v(1), v(2)});
}

Vec3 toVec(const json &j)
{
    const auto a = j.get<std::array<double, 3>>();
    return {a[0], a[1], a[2]};
}

json mat(const Mat3 &m)
{
    json rows = json::array();
    for (int r = 0; r < 3; r++)
        rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return rows;
}

Mat3 toMat(const json &j)
{
    Mat3 m;
    for (int r = 0; r < 3; r++)
        m.row(r) = toVec(j.at(r)).transpose();
    return m;
}

json marginsJson(const SafetyMargins &m)
{
    return {{"radius", m.radius}, {"temporal", m.temporal}, {"vertical", m.vertical}};
}

template <class F> auto parsing(const char *what, F &&f)
{
    try
    {
        return f();
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorCode::Io, std::string("malformed ") + what + ": " + e.what());
    }
}

} // namespace

std::string readFile(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void writeFileAtomic(const std::string &path, const std::string &content)
{
    const fs::path target(path);
    if (target.has_parent_path())
        fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::Io, "cannot write " + tmp);
        out << content;
        out.flush();
        if (!out)
            throw Error(ErrorCode::Io, "short write to " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec)
    {
        fs::remove(tmp);
        throw Error(ErrorCode::Io, "cannot move " + tmp + " over " + path + ": " + ec.message());
    }
}

ObstacleMap parseMap(const std::string &text, const std::optional<Aabb> &cloudBounds)
{
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> body;
    while (std::getline(in, line))
    {
        const auto p = line.find_first_not_of(" \t\r");
        if (p == std::string::npos || line[p] == '#')
            continue;
        body.push_back(line);
    }
    if (!body.empty() && body.front().rfind("voxel", body.front().find_first_not_of(" \t")) != std::string::npos &&
        body.front().find("voxel") == body.front().find_first_not_of(" \t"))
    {
        std::istringstream h(body.front());
        std::string tag;
        int nx = 0, ny = 0, nz = 0;
        double res = 0, ox = 0, oy = 0, oz = 0;
        if (!(h >> tag >> nx >> ny >> nz >> res >> ox >> oy >> oz))
            throw Error(ErrorCode::Io, "voxel header must be 'voxel nx ny nz resolution ox oy oz'");
        if (nx <= 0 || ny <= 0 || nz <= 0 || !(res > 0.0))
            throw Error(ErrorCode::Io, "voxel header needs positive dimensions and resolution");
        std::vector<bool> occ(static_cast<std::size_t>(nx) * ny * nz, false);
        for (std::size_t k = 1; k < body.size(); k++)
        {
            std::istringstream ls(body[k]);
            long i, j, l;
            if (!(ls >> i >> j >> l))
                throw Error(ErrorCode::Io, "bad voxel line " + std::to_string(k + 1) + ": '" + body[k] + "'");
            if (i < 0 || j < 0 || l < 0 || i >= nx || j >= ny || l >= nz)
                throw Error(ErrorCode::Io, "voxel index out of range: '" + body[k] + "'");
            occ[(static_cast<std::size_t>(l) * ny + j) * nx + i] = true;
        }
        return ObstacleMap::voxelGrid(Vec3(ox, oy, oz), res, nx, ny, nz, std::move(occ));
    }
    if (!cloudBounds)
        throw Error(ErrorCode::Io, "point-cloud maps need cloud_bounds in the config");
    std::vector<Vec3> pts;
    for (const auto &b : body)
    {
        std::istringstream ls(b);
        double x, y, z;
        if (!(ls >> x >> y >> z))
            throw Error(ErrorCode::Io, "bad point line: '" + b + "'");
        pts.emplace_back(x, y, z);
    }
    return ObstacleMap::pointCloud(std::move(pts), *cloudBounds);
}

std::string voxelMapText(const ObstacleMap &map)
{
    if (map.kind() != ObstacleMap::Kind::VoxelGrid)
        throw Error(ErrorCode::InvalidArgument, "only voxel maps have a voxel text form");
    std::ostringstream os;
    const auto d = map.dims();
    os << "voxel " << d(0) << ' ' << d(1) << ' ' << d(2) << ' ' << num(map.resolution()) << ' '
       << num(map.origin()(0)) << ' ' << num(map.origin()(1)) << ' ' << num(map.origin()(2)) << '\n';
    for (int k = 0; k < d(2); k++)
        for (int j = 0; j < d(1); j++)
            for (int i = 0; i < d(0); i++)
                if (map.occupied(i, j, k))
                    os << i << ' ' << j << ' ' << k << '\n';
    return os.str();
}

std::string polyMapJson(const PolyMap &map, const PolyMapMeta &meta)
{
    json polys = json::array();
    for (const auto &p : map.polytopes())
    {
        json normals = json::array();
        for (int k = 0; k < p.faceCount(); k++)
            normals.push_back(vec(p.normals.row(k).transpose()));
        polys.push_back({{"normals", normals},
                         {"offsets", std::vector<double>(p.offsets.data(), p.offsets.data() + p.offsets.size())},
                         {"interior", vec(p.interior)}});
    }
    json j = {{"epsilon", map.epsilon()},
              {"bounds", {{"lo", vec(map.bounds().lo)}, {"hi", vec(map.bounds().hi)}}},
              {"polytopes", polys},
              {"metadata",
               {{"fill_estimate", meta.fillEstimate},
                {"fill_std_error", meta.fillStdError},
                {"samples", meta.samples},
                {"seeds_accepted", meta.seedsAccepted}}}};
    return j.dump() + "\n";
}

PolyMap parsePolyMap(const std::string &text, PolyMapMeta *meta)
{
    return parsing("polymap", [&] {
        const json j = json::parse(text);
        std::vector<HalfspacePolytope> polys;
        for (const auto &p : j.at("polytopes"))
        {
            const auto &n = p.at("normals");
            const auto b = p.at("offsets").get<std::vector<double>>();
            if (n.size() != b.size())
                throw Error(ErrorCode::Io, "polytope normals and offsets differ in length");
            Eigen::MatrixX3d N(static_cast<Eigen::Index>(n.size()), 3);
            for (std::size_t k = 0; k < n.size(); k++)
                N.row(static_cast<Eigen::Index>(k)) = toVec(n[k]).transpose();
            polys.emplace_back(N, Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())),
                               toVec(p.at("interior")));
        }
        const Aabb bounds(toVec(j.at("bounds").at("lo")), toVec(j.at("bounds").at("hi")));
        if (meta && j.contains("metadata"))
        {
            const auto &m = j.at("metadata");
            meta->fillEstimate = m.value("fill_estimate", -1.0);
            meta->fillStdError = m.value("fill_std_error", 0.0);
            meta->samples = m.value("samples", std::size_t{0});
            meta->seedsAccepted = m.value("seeds_accepted", std::size_t{0});
        }
        return PolyMap(std::move(polys), j.at("epsilon").get<double>(), bounds);
    });
}

std::string trajectoryJson(const MincoTrajectory &traj, int id)
{
    json pieces = json::array();
    for (int i = 0; i < traj.pieces(); i++)
    {
        json rows = json::array();
        for (int k = 0; k < MincoTrajectory::kOrder; k++)
            rows.push_back(vec(traj.coeffs().row(MincoTrajectory::kOrder * i + k).transpose()));
        pieces.push_back({{"duration", traj.durations()(i)}, {"coeffs", rows}});
    }
    json j = {{"t0", traj.startTime()},
              {"pieces", pieces},
              {"boundary", {{"head", mat(traj.boundary().head)}, {"tail", mat(traj.boundary().tail)}}}};
    if (id >= 0)
        j["id"] = id;
    return j.dump() + "\n";
}

MincoTrajectory parseTrajectory(const std::string &text, int *id)
{
    return parsing("trajectory", [&] {
        const json j = json::parse(text);
        const auto &pieces = j.at("pieces");
        const auto M = static_cast<Eigen::Index>(pieces.size());
        if (M == 0)
            throw Error(ErrorCode::Io, "trajectory has no pieces");
        Eigen::MatrixX3d C(MincoTrajectory::kOrder * M, 3);
        Eigen::VectorXd T(M);
        for (Eigen::Index i = 0; i < M; i++)
        {
            const auto &p = pieces.at(static_cast<std::size_t>(i));
            T(i) = p.at("duration").get<double>();
            const auto &rows = p.at("coeffs");
            if (rows.size() != MincoTrajectory::kOrder)
                throw Error(ErrorCode::Io, "each piece needs 6 coefficient rows");
            for (int k = 0; k < MincoTrajectory::kOrder; k++)
                C.row(MincoTrajectory::kOrder * i + k) = toVec(rows.at(static_cast<std::size_t>(k))).transpose();
        }
        BoundaryState bd;
        bd.head = toMat(j.at("boundary").at("head"));
        bd.tail = toMat(j.at("boundary").at("tail"));
        if (id)
            *id = j.value("id", -1);
        return MincoTrajectory::fromCoefficients(std::move(C), std::move(T), bd, j.at("t0").get<double>());
    });
}

std::vector<Mission> parseMissions(const std::string &text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<Mission> out;
    int lineNo = 0;
    while (std::getline(in, line))
    {
        lineNo++;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        if (out.empty() && !f.empty() && f[0].find("id") != std::string::npos)
            continue;
        if (f.size() != 8)
            throw Error(ErrorCode::Io, "mission line " + std::to_string(lineNo) + " needs 8 fields");
        double v[8];
        for (int k = 0; k < 8; k++)
        {
            try
            {
                std::size_t used = 0;
                v[k] = std::stod(f[static_cast<std::size_t>(k)], &used);
                if (f[static_cast<std::size_t>(k)].find_first_not_of(" \t", used) != std::string::npos)
                    throw std::invalid_argument("trailing");
            }
            catch (const std::exception &)
            {
                throw Error(ErrorCode::Io, "mission line " + std::to_string(lineNo) + ": bad number '" +
                                               f[static_cast<std::size_t>(k)] + "'");
            }
        }
        Mission m{static_cast<int>(v[0]), Vec3(v[2], v[3], v[4]), Vec3(v[5], v[6], v[7]), v[1]};
        if (m.id != v[0] || m.id < 0)
            throw Error(ErrorCode::Io, "mission line " + std::to_string(lineNo) + ": id must be a non-negative integer");
        for (const auto &o : out)
            if (o.id == m.id)
                throw Error(ErrorCode::Io, "duplicate mission id " + std::to_string(m.id));
        out.push_back(m);
    }
    return out;
}

std::string missionsCsv(std::span<const Mission> missions)
{
    std::ostringstream os;
    os << "id,t_o,ox,oy,oz,fx,fy,fz\n";
    for (const auto &m : missions)
    {
        os << m.id << ',' << num(m.requestTime);
        for (const Vec3 *p : {&m.start, &m.goal})
            for (int k = 0; k < 3; k++)
                os << ',' << num((*p)(k));
        os << '\n';
    }
    return os.str();
}

std::vector<ProfileRow> dynamicProfile(const MincoTrajectory &traj, const VehicleModel &model, double yaw,
                                       double rate)
{
    if (!(rate > 0.0))
        throw Error(ErrorCode::InvalidArgument, "profile rate must be positive");
    std::vector<ProfileRow> rows;
    const long n = static_cast<long>(std::floor(traj.totalDuration() * rate + 1e-9));
    for (long k = 0; k <= n; k++)
    {
        const double t = traj.startTime() + static_cast<double>(k) / rate;
        FlatPoint p;
        p.pos = traj.eval(t, 0);
        p.vel = traj.eval(t, 1);
        p.acc = traj.eval(t, 2);
        p.jerk = traj.eval(t, 3);
        p.yaw = yaw;
        const StateInput s = flatnessMap(model, p);
        ProfileRow r;
        r.t = t;
        r.speed = p.vel.norm();
        r.tiltDeg = std::acos(std::clamp(s.zb(2), -1.0, 1.0)) * 180.0 / std::numbers::pi;
        r.omegaNorm = s.omega.norm();
        r.thrustNorm = s.thrust / model.mass;
        r.dragNorm = s.drag.norm() / model.mass;
        rows.push_back(r);
    }
    return rows;
}

std::string profileCsv(std::span<const ProfileRow> rows)
{
    std::ostringstream os;
    os << "t,speed,tilt_deg,omega_norm,thrust_norm,drag_norm\n";
    for (const auto &r : rows)
        os << num(r.t) << ',' << num(r.speed) << ',' << num(r.tiltDeg) << ',' << num(r.omegaNorm) << ','
           << num(r.thrustNorm) << ',' << num(r.dragNorm) << '\n';
    return os.str();
}

std::string robustnessCsv(std::span<const RobustnessRow> rows)
{
    std::ostringstream os;
    os << "dt_max,mean_min_dist,std_min_dist,trials\n";
    for (const auto &r : rows)
        os << num(r.dtMax) << ',' << num(r.mean) << ',' << num(r.stddev) << ',' << r.trials << '\n';
    return os.str();
}

std::string metricsCsv(std::span<const MissionOutcome> outcomes)
{
    std::ostringstream os;
    os << "id,status,error,scheduled,corridor,departure,arrival,containment,criterion,limits\n";
    for (const auto &o : outcomes)
    {
        os << o.mission.id << ',' << missionStatusName(o.status) << ',' << errorName(o.error) << ',';
        if (o.status != MissionStatus::Committed)
        {
            os << ",,,,,,\n";
            continue;
        }
        const auto &tr = o.plan.trajectory;
        const auto &r = o.plan.report;
        os << (o.plan.scheduled ? 1 : 0) << ',' << o.plan.corridorSize << ',' << num(tr.startTime()) << ','
           << num(tr.startTime() + tr.totalDuration()) << ',' << num(r.containment) << ',' << num(r.criterion) << ','
           << num(r.limits) << '\n';
    }
    return os.str();
}

void writeFleetDir(const std::string &dir, const FleetDb &db, std::span<const CommitRecord> log,
                   const PairAudit &audit, double auditResolution)
{
    fs::create_directories(dir);
    json trajs = json::array();
    for (const auto &e : db.snapshot())
    {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%04d.json", e.id);
        writeFileAtomic((fs::path(dir) / name).string(), trajectoryJson(*e.trajectory, e.id));
        trajs.push_back({{"id", e.id}, {"file", name}});
    }
    json commits = json::array();
    for (const auto &r : log)
    {
        commits.push_back({{"id", r.id},
                           {"status", missionStatusName(r.status)},
                           {"error", r.error},
                           {"message", r.message},
                           {"scheduled", r.scheduled}});
    }
    json a = {{"pairs", audit.pairs}, {"resolution", auditResolution}};
    if (audit.pairs > 0)
    {
        a["worst_margin"] = audit.worstMargin;
        a["pair"] = {audit.first, audit.second};
    }
    const json j = {{"margins", marginsJson(db.margins())}, {"trajectories", trajs}, {"commit_log", commits},
                    {"audit", a}};
    writeFileAtomic((fs::path(dir) / "fleet.json").string(), j.dump(2) + "\n");
}

FleetFiles readFleetDir(const std::string &dir)
{
    const std::string text = readFile((fs::path(dir) / "fleet.json").string());
    return parsing("fleet.json", [&] {
        const json j = json::parse(text);
        FleetFiles f;
        const auto &m = j.at("margins");
        f.margins.radius = m.at("radius").get<double>();
        f.margins.temporal = m.at("temporal").get<double>();
        f.margins.vertical = m.at("vertical").get<double>();
        for (const auto &t : j.at("trajectories"))
        {
            f.ids.push_back(t.at("id").get<int>());
            f.trajectories.push_back(
                parseTrajectory(readFile((fs::path(dir) / t.at("file").get<std::string>()).string())));
        }
        for (const auto &c : j.value("commit_log", json::array()))
        {
            CommitRecord r;
            r.id = c.at("id").get<int>();
            const auto s = c.at("status").get<std::string>();
            r.status = s == "committed" ? MissionStatus::Committed
                       : s == "failed"  ? MissionStatus::Failed
                                        : MissionStatus::Pending;
            r.error = c.value("error", std::string());
            r.message = c.value("message", std::string());
            r.scheduled = c.value("scheduled", false);
            f.log.push_back(r);
        }
        return f;
    });
}

} // namespace swarmtraj::io
