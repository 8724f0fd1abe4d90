#include "swarmtraj/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

namespace swarmtraj
{

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 uniformIn(const Aabb &box, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec3 x;
    for (int d = 0; d < 3; d++)
    {
        x(d) = box.lo(d) + u(rng) * (box.hi(d) - box.lo(d));
    }
    return x;
}

// Uniform cell lists over a fixed world box; cells hold ids of boxes that overlap them.
class CellGrid
{
public:
    void init(const Aabb &world, int targetCells)
    {
        world_ = world;
        const double longest = std::max(world.size().maxCoeff(), 1e-9);
        cell_ = longest / targetCells;
        for (int d = 0; d < 3; d++)
        {
            dims_(d) = std::clamp(static_cast<int>(std::ceil(world.size()(d) / cell_)), 1, 4 * targetCells);
        }
        cells_.assign(static_cast<std::size_t>(dims_.prod()), {});
    }

    void add(const Aabb &box, int id)
    {
        Eigen::Vector3i lo, hi;
        range(box, lo, hi);
        for (int k = lo(2); k <= hi(2); k++)
            for (int j = lo(1); j <= hi(1); j++)
                for (int i = lo(0); i <= hi(0); i++)
                {
                    cells_[flat(i, j, k)].push_back(id);
                }
    }

    const std::vector<int> &at(const Vec3 &x) const
    {
        Eigen::Vector3i c;
        for (int d = 0; d < 3; d++)
        {
            c(d) = std::clamp(static_cast<int>(std::floor((x(d) - world_.lo(d)) / cell_)), 0, dims_(d) - 1);
        }
        return cells_[flat(c(0), c(1), c(2))];
    }

    void gather(const Aabb &box, std::vector<int> &out) const
    {
        Eigen::Vector3i lo, hi;
        range(box, lo, hi);
        for (int k = lo(2); k <= hi(2); k++)
            for (int j = lo(1); j <= hi(1); j++)
                for (int i = lo(0); i <= hi(0); i++)
                {
                    const auto &c = cells_[flat(i, j, k)];
                    out.insert(out.end(), c.begin(), c.end());
                }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }

private:
    void range(const Aabb &box, Eigen::Vector3i &lo, Eigen::Vector3i &hi) const
    {
        for (int d = 0; d < 3; d++)
        {
            lo(d) = std::clamp(static_cast<int>(std::floor((box.lo(d) - world_.lo(d)) / cell_)), 0, dims_(d) - 1);
            hi(d) = std::clamp(static_cast<int>(std::floor((box.hi(d) - world_.lo(d)) / cell_)), 0, dims_(d) - 1);
        }
    }

    std::size_t flat(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(k) * dims_(1) + j) * dims_(0) + i;
    }

    Aabb world_;
    double cell_ = 1.0;
    Eigen::Vector3i dims_ = Eigen::Vector3i::Ones();
    std::vector<std::vector<int>> cells_{1};
};

// Incremental convex hull used on the dual points. Faces are outward triangles.
struct Hull
{
    struct Face
    {
        int v[3];
        Vec3 n;
        double d;
        bool alive;
    };

    std::vector<Face> faces;

    bool build(const std::vector<Vec3> &p, double eps)
    {
        const int n = static_cast<int>(p.size());
        if (n < 4)
        {
            return false;
        }
        int i0 = 0;
        for (int i = 1; i < n; i++)
        {
            if (p[i](0) < p[i0](0))
                i0 = i;
        }
        int i1 = -1;
        double best = 0.0;
        for (int i = 0; i < n; i++)
        {
            const double v = (p[i] - p[i0]).norm();
            if (v > best)
            {
                best = v;
                i1 = i;
            }
        }
        if (i1 < 0 || best <= eps)
            return false;
        const Vec3 e = (p[i1] - p[i0]).normalized();
        int i2 = -1;
        best = 0.0;
        for (int i = 0; i < n; i++)
        {
            const Vec3 r = p[i] - p[i0];
            const double v = (r - r.dot(e) * e).norm();
            if (v > best)
            {
                best = v;
                i2 = i;
            }
        }
        if (i2 < 0 || best <= eps)
            return false;
        const Vec3 pn = (p[i1] - p[i0]).cross(p[i2] - p[i0]).normalized();
        int i3 = -1;
        best = 0.0;
        for (int i = 0; i < n; i++)
        {
            const double v = std::abs((p[i] - p[i0]).dot(pn));
            if (v > best)
            {
                best = v;
                i3 = i;
            }
        }
        if (i3 < 0 || best <= eps)
            return false;

        center_ = 0.25 * (p[i0] + p[i1] + p[i2] + p[i3]);
        faces.clear();
        addFace(p, i0, i1, i2);
        addFace(p, i0, i1, i3);
        addFace(p, i0, i2, i3);
        addFace(p, i1, i2, i3);

        std::vector<std::pair<int, int>> edges;
        std::set<std::pair<int, int>> edgeSet;
        for (int i = 0; i < n; i++)
        {
            if (i == i0 || i == i1 || i == i2 || i == i3)
                continue;
            edges.clear();
            edgeSet.clear();
            for (auto &f : faces)
            {
                if (f.alive && f.n.dot(p[i]) - f.d > eps)
                {
                    f.alive = false;
                    for (int k = 0; k < 3; k++)
                    {
                        edges.emplace_back(f.v[k], f.v[(k + 1) % 3]);
                        edgeSet.emplace(f.v[k], f.v[(k + 1) % 3]);
                    }
                }
            }
            for (const auto &[a, b] : edges)
            {
                if (!edgeSet.count({b, a}))
                {
                    addFace(p, a, b, i);
                }
            }
        }
        std::erase_if(faces, [](const Face &f) { return !f.alive; });
        return true;
    }

private:
    void addFace(const std::vector<Vec3> &p, int a, int b, int c)
    {
        Face f{{a, b, c}, (p[b] - p[a]).cross(p[c] - p[a]), 0.0, true};
        const double len = f.n.norm();
        if (len > 0.0)
        {
            f.n /= len;
        }
        f.d = f.n.dot(p[a]);
        if (f.n.dot(center_) > f.d)
        {
            f.n = -f.n;
            f.d = -f.d;
            std::swap(f.v[1], f.v[2]);
        }
        faces.push_back(f);
    }

    Vec3 center_ = Vec3::Zero();
};

} // namespace

Aabb Aabb::empty()
{
    return {Vec3::Constant(kInf), Vec3::Constant(-kInf)};
}

Aabb Aabb::around(const Vec3 &center, double halfWidth)
{
    return {center.array() - halfWidth, center.array() + halfWidth};
}

bool Aabb::intersects(const Aabb &o) const
{
    return (lo.array() <= o.hi.array()).all() && (o.lo.array() <= hi.array()).all();
}

Aabb Aabb::intersection(const Aabb &o) const
{
    return {lo.cwiseMax(o.lo), hi.cwiseMin(o.hi)};
}

Aabb Aabb::inflated(double r) const
{
    return {lo.array() - r, hi.array() + r};
}

void Aabb::expand(const Vec3 &x)
{
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
}

void Aabb::expand(const Aabb &o)
{
    lo = lo.cwiseMin(o.lo);
    hi = hi.cwiseMax(o.hi);
}

double Aabb::volume() const
{
    return valid() ? size().prod() : 0.0;
}

HalfspacePolytope HalfspacePolytope::fromBox(const Aabb &box)
{
    Eigen::MatrixX3d n(6, 3);
    Eigen::VectorXd b(6);
    n << 1, 0, 0, 0, 1, 0, 0, 0, 1, -1, 0, 0, 0, -1, 0, 0, 0, -1;
    b << box.hi(0), box.hi(1), box.hi(2), -box.lo(0), -box.lo(1), -box.lo(2);
    return {n, b, box.center()};
}

double HalfspacePolytope::depth(const Vec3 &x) const
{
    if (offsets.size() == 0)
    {
        return kInf;
    }
    return (offsets - normals * x).minCoeff();
}

void HalfspacePolytope::addHalfspace(const Vec3 &normal, double offset)
{
    const double len = normal.norm();
    const int k = faceCount();
    normals.conservativeResize(k + 1, Eigen::NoChange);
    offsets.conservativeResize(k + 1);
    normals.row(k) = (normal / len).transpose();
    offsets(k) = offset / len;
}

HalfspacePolytope HalfspacePolytope::intersect(const HalfspacePolytope &a, const HalfspacePolytope &b)
{
    HalfspacePolytope out;
    out.normals.resize(a.faceCount() + b.faceCount(), 3);
    out.normals << a.normals, b.normals;
    out.offsets.resize(a.faceCount() + b.faceCount());
    out.offsets << a.offsets, b.offsets;
    out.interior = a.interior;
    return out;
}

bool contains(const HalfspacePolytope &poly, const Vec3 &x, double slack)
{
    for (int k = 0; k < poly.faceCount(); k++)
    {
        if (poly.normals.row(k).dot(x) > poly.offsets(k) + slack)
        {
            return false;
        }
    }
    return true;
}

Vec3 chebyshevLikeCenter(const HalfspacePolytope &poly)
{
    const auto &A = poly.normals;
    const auto &b = poly.offsets;
    const int m = poly.faceCount();
    if (m < 4)
    {
        throw Error(ErrorCode::EmptyInterior, "too few halfspaces for a bounded region");
    }

    Vec3 x = poly.interior;
    if (!x.allFinite())
    {
        x.setZero();
    }

    if (poly.depth(x) <= 0.0)
    {
        // phase I: min s subject to A x - b <= s, by a barrier path in (x, s)
        double s = (A * x - b).maxCoeff() + 1.0;
        bool found = false;
        for (double t = 1.0; t <= 1e14 && !found; t *= 8.0)
        {
            for (int it = 0; it < 60; it++)
            {
                const Eigen::VectorXd d = (b - A * x).array() + s;
                Eigen::Vector4d g = Eigen::Vector4d::Zero();
                Eigen::Matrix4d H = Eigen::Matrix4d::Zero();
                g(3) = t;
                for (int k = 0; k < m; k++)
                {
                    Eigen::Vector4d a;
                    a << -A.row(k).transpose(), 1.0;
                    g -= a / d(k);
                    H += a * a.transpose() / (d(k) * d(k));
                }
                const Eigen::Vector4d step = -H.ldlt().solve(g);
                const double dec = -g.dot(step);
                if (!step.allFinite())
                {
                    break;
                }
                auto f = [&](const Vec3 &xx, double ss) {
                    const Eigen::VectorXd dd = (b - A * xx).array() + ss;
                    if (dd.minCoeff() <= 0.0)
                        return kInf;
                    return t * ss - dd.array().log().sum();
                };
                const double f0 = f(x, s);
                double alpha = 1.0;
                while (alpha > 1e-12)
                {
                    const Vec3 xn = x + alpha * step.head<3>();
                    const double sn = s + alpha * step(3);
                    if (f(xn, sn) <= f0 - 0.25 * alpha * dec)
                    {
                        x = xn;
                        s = sn;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (poly.depth(x) > 0.0)
                {
                    found = true;
                    break;
                }
                if (dec < 1e-10 || alpha <= 1e-12)
                {
                    break;
                }
            }
        }
        if (!found)
        {
            throw Error(ErrorCode::EmptyInterior, "no strictly feasible point");
        }
    }

    // phase II: damped Newton on the log barrier
    for (int it = 0; it < 100; it++)
    {
        const Eigen::VectorXd d = b - A * x;
        Vec3 g = Vec3::Zero();
        Mat3 H = Mat3::Zero();
        for (int k = 0; k < m; k++)
        {
            const Vec3 a = A.row(k).transpose();
            g += a / d(k);
            H += a * a.transpose() / (d(k) * d(k));
        }
        const Vec3 step = -H.ldlt().solve(g);
        const double dec = -g.dot(step);
        if (!step.allFinite() || dec < 1e-20)
        {
            break;
        }
        const double f0 = -d.array().log().sum();
        double alpha = 1.0;
        bool moved = false;
        while (alpha > 1e-12)
        {
            const Vec3 xn = x + alpha * step;
            const Eigen::VectorXd dn = b - A * xn;
            if (dn.minCoeff() > 0.0 && -dn.array().log().sum() <= f0 - 0.25 * alpha * dec)
            {
                x = xn;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved || dec < 1e-16)
        {
            break;
        }
    }

    if (!(poly.depth(x) >= 1e-6))
    {
        throw Error(ErrorCode::EmptyInterior, "interior thinner than 1e-6 m");
    }
    return x;
}

std::vector<Vec3> enumerateVertices(const HalfspacePolytope &poly, const Vec3 &interior)
{
    const int m = poly.faceCount();
    std::vector<Vec3> dual(static_cast<std::size_t>(m));
    double scale = 0.0;
    for (int k = 0; k < m; k++)
    {
        const double margin = poly.offsets(k) - poly.normals.row(k).dot(interior);
        if (!(margin > 0.0))
        {
            throw Error(ErrorCode::Unbounded, "interior point not strictly feasible");
        }
        dual[k] = poly.normals.row(k).transpose() / margin;
        scale = std::max(scale, dual[k].norm());
    }

    Hull hull;
    const double eps = 1e-11 * scale;
    if (!hull.build(dual, eps))
    {
        throw Error(ErrorCode::Unbounded, "degenerate dual hull");
    }

    std::vector<Vec3> out;
    std::vector<int> active;
    for (const auto &f : hull.faces)
    {
        if (!(f.d > 1e-12 * scale))
        {
            throw Error(ErrorCode::Unbounded, "origin not interior to dual hull");
        }
        // least squares over every dual point on this facet: y_k . x = 1
        active.clear();
        const double tol = std::max(1e-9 * scale, 1e-9 * f.d);
        for (int k = 0; k < m; k++)
        {
            if (std::abs(f.n.dot(dual[k]) - f.d) <= tol)
            {
                active.push_back(k);
            }
        }
        Vec3 v = f.n / f.d;
        if (active.size() >= 3)
        {
            Eigen::MatrixX3d Y(static_cast<Eigen::Index>(active.size()), 3);
            for (std::size_t r = 0; r < active.size(); r++)
            {
                Y.row(static_cast<Eigen::Index>(r)) = dual[active[r]].transpose();
            }
            const Vec3 ls = Y.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(Y.rows()));
            if (ls.allFinite() && ((Y * ls).array() - 1.0).abs().maxCoeff() <= 1e-8)
            {
                v = ls;
            }
        }
        v += interior;
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Vec3 &w) { return (w - v).norm() <= 1e-7; });
        if (!dup)
        {
            out.push_back(v);
        }
    }
    return out;
}

std::vector<int> activeHalfspaces(const HalfspacePolytope &poly, std::span<const Vec3> vertices, double tol)
{
    std::vector<int> out;
    for (int k = 0; k < poly.faceCount(); k++)
    {
        int touching = 0;
        for (const auto &v : vertices)
        {
            if (std::abs(poly.offsets(k) - poly.normals.row(k).dot(v)) <= tol)
            {
                touching++;
            }
        }
        if (touching >= 3)
        {
            out.push_back(k);
        }
    }
    return out;
}

Aabb boundingBox(std::span<const Vec3> points)
{
    Aabb box = Aabb::empty();
    for (const auto &p : points)
    {
        box.expand(p);
    }
    return box;
}

ObstacleMap ObstacleMap::voxelGrid(const Vec3 &origin, double resolution, int nx, int ny, int nz,
                                   std::vector<bool> occupancy)
{
    if (!(resolution > 0.0) || nx <= 0 || ny <= 0 || nz <= 0)
    {
        throw Error(ErrorCode::InvalidArgument, "voxel grid needs positive resolution and dimensions");
    }
    if (occupancy.size() != static_cast<std::size_t>(nx) * ny * nz)
    {
        throw Error(ErrorCode::InvalidArgument, "occupancy size does not match grid dimensions");
    }
    ObstacleMap map;
    map.kind_ = Kind::VoxelGrid;
    map.origin_ = origin;
    map.resolution_ = resolution;
    map.dims_ = Eigen::Vector3i(nx, ny, nz);
    map.bounds_ = Aabb(origin, origin + resolution * Vec3(nx, ny, nz));
    map.occupancy_ = std::move(occupancy);
    return map;
}

ObstacleMap ObstacleMap::pointCloud(std::vector<Vec3> points, const Aabb &bounds)
{
    if (!bounds.valid() || bounds.volume() <= 0.0)
    {
        throw Error(ErrorCode::InvalidArgument, "point cloud bounds must have positive volume");
    }
    ObstacleMap map;
    map.kind_ = Kind::PointCloud;
    map.bounds_ = bounds;
    map.origin_ = bounds.lo;
    for (const auto &p : points)
    {
        if (!bounds.contains(p))
        {
            throw Error(ErrorCode::InvalidArgument, "obstacle point outside scene bounds");
        }
    }
    map.points_ = std::move(points);
    map.bucketSize_ = std::max(bounds.size().maxCoeff() / 32.0, 1e-6);
    for (int d = 0; d < 3; d++)
    {
        map.bucketDims_(d) = std::max(1, static_cast<int>(std::ceil(bounds.size()(d) / map.bucketSize_)));
    }
    map.buckets_.assign(static_cast<std::size_t>(map.bucketDims_.prod()), {});
    for (std::size_t i = 0; i < map.points_.size(); i++)
    {
        Eigen::Vector3i c;
        for (int d = 0; d < 3; d++)
        {
            c(d) = std::clamp(static_cast<int>((map.points_[i](d) - bounds.lo(d)) / map.bucketSize_), 0,
                              map.bucketDims_(d) - 1);
        }
        map.buckets_[(static_cast<std::size_t>(c(2)) * map.bucketDims_(1) + c(1)) * map.bucketDims_(0) + c(0)]
            .push_back(static_cast<int>(i));
    }
    return map;
}

std::size_t ObstacleMap::obstacleCount() const
{
    if (kind_ == Kind::PointCloud)
    {
        return points_.size();
    }
    return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), true));
}

bool ObstacleMap::occupied(int i, int j, int k) const
{
    if (i < 0 || j < 0 || k < 0 || i >= dims_(0) || j >= dims_(1) || k >= dims_(2))
    {
        return false;
    }
    return occupancy_[(static_cast<std::size_t>(k) * dims_(1) + j) * dims_(0) + i];
}

Vec3 ObstacleMap::voxelCenter(int i, int j, int k) const
{
    return origin_ + resolution_ * Vec3(i + 0.5, j + 0.5, k + 0.5);
}

bool ObstacleMap::isFree(const Vec3 &x) const
{
    if (!bounds_.contains(x))
    {
        return false;
    }
    if (kind_ == Kind::PointCloud)
    {
        return true;
    }
    Eigen::Vector3i c;
    for (int d = 0; d < 3; d++)
    {
        c(d) = std::clamp(static_cast<int>(std::floor((x(d) - origin_(d)) / resolution_)), 0, dims_(d) - 1);
    }
    return !occupied(c(0), c(1), c(2));
}

void ObstacleMap::collectObstacles(const Aabb &box, std::vector<Vec3> &out) const
{
    if (kind_ == Kind::VoxelGrid)
    {
        Eigen::Vector3i lo, hi;
        for (int d = 0; d < 3; d++)
        {
            lo(d) = std::max(0, static_cast<int>(std::ceil((box.lo(d) - origin_(d)) / resolution_ - 0.5)));
            hi(d) = std::min(dims_(d) - 1, static_cast<int>(std::floor((box.hi(d) - origin_(d)) / resolution_ - 0.5)));
        }
        for (int k = lo(2); k <= hi(2); k++)
            for (int j = lo(1); j <= hi(1); j++)
                for (int i = lo(0); i <= hi(0); i++)
                {
                    if (occupied(i, j, k))
                    {
                        out.push_back(voxelCenter(i, j, k));
                    }
                }
        return;
    }
    Eigen::Vector3i lo, hi;
    for (int d = 0; d < 3; d++)
    {
        lo(d) = std::clamp(static_cast<int>(std::floor((box.lo(d) - bounds_.lo(d)) / bucketSize_)), 0, bucketDims_(d) - 1);
        hi(d) = std::clamp(static_cast<int>(std::floor((box.hi(d) - bounds_.lo(d)) / bucketSize_)), 0, bucketDims_(d) - 1);
    }
    for (int k = lo(2); k <= hi(2); k++)
        for (int j = lo(1); j <= hi(1); j++)
            for (int i = lo(0); i <= hi(0); i++)
            {
                for (int id : buckets_[(static_cast<std::size_t>(k) * bucketDims_(1) + j) * bucketDims_(0) + i])
                {
                    if (box.contains(points_[static_cast<std::size_t>(id)]))
                    {
                        out.push_back(points_[static_cast<std::size_t>(id)]);
                    }
                }
            }
}

std::vector<Vec3> ObstacleMap::allObstacles() const
{
    if (kind_ == Kind::PointCloud)
    {
        return points_;
    }
    std::vector<Vec3> out;
    collectObstacles(bounds_, out);
    return out;
}

HalfspacePolytope generatePolytope(const Vec3 &seed, const ObstacleMap &obstacles, const Aabb &localBox,
                                   double clearance)
{
    const Aabb box = localBox.intersection(obstacles.bounds());
    if (!box.valid() || !box.contains(seed))
    {
        throw Error(ErrorCode::InvalidArgument, "seed outside the local box");
    }
    if (!obstacles.isFree(seed))
    {
        throw Error(ErrorCode::SeedOccupied, "seed collides with an obstacle");
    }
    if (clearance <= 0.0)
    {
        clearance = obstacles.kind() == ObstacleMap::Kind::VoxelGrid ? 0.5 * obstacles.resolution() : 1e-3;
    }

    std::vector<Vec3> pts;
    obstacles.collectObstacles(box, pts);
    std::vector<std::pair<double, int>> order;
    order.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); i++)
    {
        const double d2 = (pts[i] - seed).squaredNorm();
        if (d2 == 0.0)
        {
            throw Error(ErrorCode::SeedOccupied, "seed coincides with an obstacle point");
        }
        order.emplace_back(d2, static_cast<int>(i));
    }
    std::sort(order.begin(), order.end());

    HalfspacePolytope poly = HalfspacePolytope::fromBox(box);
    // Visiting in distance order makes the first contained point the nearest one.
    for (const auto &[d2, id] : order)
    {
        const Vec3 &o = pts[static_cast<std::size_t>(id)];
        if (!contains(poly, o))
        {
            continue;
        }
        const double dist = std::sqrt(d2);
        const Vec3 n = (o - seed) / dist;
        poly.addHalfspace(n, n.dot(o) - std::min(clearance, 0.5 * dist));
    }
    poly.interior = seed;
    return poly;
}

PolyMap::PolyMap(std::vector<HalfspacePolytope> polytopes, double epsilon, const Aabb &bounds)
    : polytopes_(std::move(polytopes)), epsilon_(epsilon), bounds_(bounds)
{
    boxes_.reserve(polytopes_.size());
    vertices_.reserve(polytopes_.size());
    for (auto &p : polytopes_)
    {
        if (!(p.depth(p.interior) >= 1e-6))
        {
            p.interior = chebyshevLikeCenter(p);
        }
        vertices_.push_back(enumerateVertices(p, p.interior));
        boxes_.push_back(boundingBox(vertices_.back()).inflated(1e-9));
    }
    index_.build(boxes_);
    buildGrid();
}

void PolyMap::buildGrid()
{
    Aabb world = bounds_.valid() ? bounds_ : Aabb::empty();
    for (const auto &b : boxes_)
    {
        world.expand(b);
    }
    if (!world.valid())
    {
        world = Aabb(Vec3::Zero(), Vec3::Ones());
    }
    const double longest = std::max(world.size().maxCoeff(), 1e-9);
    cellSize_ = longest / 32.0;
    for (int d = 0; d < 3; d++)
    {
        cellDims_(d) = std::max(1, static_cast<int>(std::ceil(world.size()(d) / cellSize_)));
    }
    gridOrigin_ = world.lo;
    cells_.assign(static_cast<std::size_t>(cellDims_.prod()), {});
    for (std::size_t id = 0; id < boxes_.size(); id++)
    {
        Eigen::Vector3i lo, hi;
        cellRange(boxes_[id], lo, hi);
        for (int k = lo(2); k <= hi(2); k++)
            for (int j = lo(1); j <= hi(1); j++)
                for (int i = lo(0); i <= hi(0); i++)
                {
                    cells_[(static_cast<std::size_t>(k) * cellDims_(1) + j) * cellDims_(0) + i].push_back(
                        static_cast<int>(id));
                }
    }
}

void PolyMap::cellRange(const Aabb &box, Eigen::Vector3i &lo, Eigen::Vector3i &hi) const
{
    for (int d = 0; d < 3; d++)
    {
        lo(d) = std::clamp(static_cast<int>(std::floor((box.lo(d) - gridOrigin_(d)) / cellSize_)), 0, cellDims_(d) - 1);
        hi(d) = std::clamp(static_cast<int>(std::floor((box.hi(d) - gridOrigin_(d)) / cellSize_)), 0, cellDims_(d) - 1);
    }
}

std::vector<int> PolyMap::stabAll(const Vec3 &x) const
{
    return index_.stab(x);
}

std::optional<int> PolyMap::stab(const Vec3 &x) const
{
    std::optional<int> best;
    double bestDepth = -kInf;
    for (int id : index_.stab(x))
    {
        const auto &p = polytopes_[static_cast<std::size_t>(id)];
        if (!contains(p, x))
        {
            continue;
        }
        const double d = p.depth(x);
        if (d > bestDepth)
        {
            bestDepth = d;
            best = id;
        }
    }
    return best;
}

bool PolyMap::inside(const Vec3 &x, double slack) const
{
    if (slack <= 0.0)
    {
        Eigen::Vector3i c, unused;
        cellRange(Aabb(x, x), c, unused);
        for (int id : cells_[(static_cast<std::size_t>(c(2)) * cellDims_(1) + c(1)) * cellDims_(0) + c(0)])
        {
            if (boxes_[static_cast<std::size_t>(id)].contains(x) && contains(polytopes_[static_cast<std::size_t>(id)], x))
            {
                return true;
            }
        }
        return false;
    }
    for (int id : boxesOverlapping(Aabb::around(x, slack)))
    {
        if (contains(polytopes_[static_cast<std::size_t>(id)], x, slack))
        {
            return true;
        }
    }
    return false;
}

double PolyMap::containmentMargin(const Vec3 &x, double searchRadius) const
{
    double best = -searchRadius;
    for (int id : boxesOverlapping(Aabb::around(x, searchRadius)))
    {
        best = std::max(best, polytopes_[static_cast<std::size_t>(id)].depth(x));
    }
    return best;
}

std::vector<int> PolyMap::boxesOverlapping(const Aabb &box) const
{
    std::vector<int> out;
    if (boxes_.empty())
    {
        return out;
    }
    Eigen::Vector3i lo, hi;
    cellRange(box, lo, hi);
    for (int k = lo(2); k <= hi(2); k++)
        for (int j = lo(1); j <= hi(1); j++)
            for (int i = lo(0); i <= hi(0); i++)
            {
                for (int id : cells_[(static_cast<std::size_t>(k) * cellDims_(1) + j) * cellDims_(0) + i])
                {
                    if (boxes_[static_cast<std::size_t>(id)].intersects(box))
                    {
                        out.push_back(id);
                    }
                }
            }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool PolyMap::segmentInside(const Vec3 &a, const Vec3 &b) const
{
    Aabb box = Aabb::empty();
    box.expand(a);
    box.expand(b);
    const Vec3 d = b - a;
    std::vector<std::pair<double, double>> spans;
    for (int id : boxesOverlapping(box))
    {
        const auto &p = polytopes_[static_cast<std::size_t>(id)];
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < p.faceCount() && lo <= hi; k++)
        {
            const double slope = p.normals.row(k).dot(d);
            const double room = p.offsets(k) - p.normals.row(k).dot(a);
            if (slope > 0.0)
            {
                hi = std::min(hi, room / slope);
            }
            else if (slope < 0.0)
            {
                lo = std::max(lo, room / slope);
            }
            else if (room < 0.0)
            {
                hi = -1.0;
            }
        }
        if (lo <= hi)
        {
            spans.emplace_back(lo, hi);
        }
    }
    std::sort(spans.begin(), spans.end());
    double reach = 0.0;
    bool started = false;
    for (const auto &[lo, hi] : spans)
    {
        if (lo > reach + 1e-9)
        {
            break;
        }
        if (!started && lo > 1e-9)
        {
            break;
        }
        started = true;
        reach = std::max(reach, hi);
    }
    return started && reach >= 1.0 - 1e-9;
}

PolyMap polyhedronize(const ObstacleMap &obstacles, const PolyhedronizeConfig &config, std::mt19937_64 &rng,
                      PolyhedronizeStats *stats)
{
    const double eps = config.epsilon;
    if (!(eps > 0.0 && eps < 1.0))
    {
        throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
    }
    const Aabb bounds = obstacles.bounds();
    const std::size_t window = static_cast<std::size_t>(std::ceil(10.0 / eps));
    const std::size_t need = static_cast<std::size_t>(std::ceil(eps * static_cast<double>(window)));

    std::vector<HalfspacePolytope> polys;
    std::vector<Aabb> boxes;
    CellGrid grid;
    grid.init(bounds, 32);

    auto covered = [&](const Vec3 &x) {
        for (int id : grid.at(x))
        {
            if (boxes[static_cast<std::size_t>(id)].contains(x) && contains(polys[static_cast<std::size_t>(id)], x))
            {
                return true;
            }
        }
        return false;
    };

    std::size_t drawn = 0, everFree = 0, accepted = 0, rounds = 0;
    auto drawFree = [&](Vec3 &x) {
        std::size_t misses = 0;
        while (true)
        {
            x = uniformIn(bounds, rng);
            drawn++;
            if (obstacles.isFree(x))
            {
                everFree++;
                return;
            }
            if (everFree == 0 && ++misses >= config.attemptBudget)
            {
                throw Error(ErrorCode::NoFreeSpace, "no free sample within the attempt budget");
            }
        }
    };

    auto grow = [&](const Vec3 &seed) {
        HalfspacePolytope poly =
            generatePolytope(seed, obstacles, Aabb::around(seed, config.localHalfWidth), config.clearance);
        Vec3 center;
        try
        {
            center = chebyshevLikeCenter(poly);
        }
        catch (const Error &)
        {
            return false;
        }
        const auto verts = enumerateVertices(poly, center);
        const auto keep = activeHalfspaces(poly, verts);
        HalfspacePolytope pruned;
        pruned.normals.resize(static_cast<Eigen::Index>(keep.size()), 3);
        pruned.offsets.resize(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t r = 0; r < keep.size(); r++)
        {
            pruned.normals.row(static_cast<Eigen::Index>(r)) = poly.normals.row(keep[r]);
            pruned.offsets(static_cast<Eigen::Index>(r)) = poly.offsets(keep[r]);
        }
        pruned.interior = center;
        const int id = static_cast<int>(polys.size());
        boxes.push_back(boundingBox(verts).inflated(1e-9));
        polys.push_back(std::move(pruned));
        grid.add(boxes.back(), id);
        return true;
    };

    double fill = 0.0, fillErr = 0.0;
    while (true)
    {
        std::vector<char> ring(window, 0);
        std::size_t filled = 0, hits = 0, pos = 0;
        while (polys.size() < config.maxPolytopes)
        {
            Vec3 x;
            drawFree(x);
            bool hit = false;
            if (!covered(x))
            {
                hit = grow(x);
                if (hit)
                {
                    accepted++;
                }
            }
            hits += static_cast<std::size_t>(hit) - static_cast<std::size_t>(ring[pos]);
            ring[pos] = hit;
            pos = (pos + 1) % window;
            filled = std::min(filled + 1, window);
            if (filled == window && hits < need)
            {
                break;
            }
        }

        rounds++;
        std::size_t in = 0;
        for (std::size_t i = 0; i < config.confirmSamples; i++)
        {
            Vec3 x;
            drawFree(x);
            in += covered(x);
        }
        const double n = static_cast<double>(std::max<std::size_t>(config.confirmSamples, 1));
        fill = static_cast<double>(in) / n;
        fillErr = std::sqrt(std::max(fill * (1.0 - fill), 0.0) / n);
        if (fill >= 1.0 - eps || polys.size() >= config.maxPolytopes)
        {
            break;
        }
    }

    if (stats)
    {
        stats->samplesDrawn = drawn;
        stats->seedsAccepted = accepted;
        stats->confirmRounds = rounds;
        stats->fillEstimate = fill;
        stats->fillStdError = fillErr;
    }
    return PolyMap(std::move(polys), eps, bounds);
}

FillEstimate estimateFill(const PolyMap &map, const ObstacleMap &obstacles, std::size_t samples, std::mt19937_64 &rng)
{
    FillEstimate est;
    std::size_t in = 0, tries = 0;
    const std::size_t cap = samples * 1000 + 1000;
    while (est.samples < samples && tries < cap)
    {
        tries++;
        const Vec3 x = uniformIn(obstacles.bounds(), rng);
        if (!obstacles.isFree(x))
        {
            continue;
        }
        est.samples++;
        in += map.inside(x);
    }
    if (est.samples > 0)
    {
        const double n = static_cast<double>(est.samples);
        est.fraction = static_cast<double>(in) / n;
        est.stdError = std::sqrt(std::max(est.fraction * (1.0 - est.fraction), 0.0) / n);
    }
    return est;
}

} // namespace swarmtraj
