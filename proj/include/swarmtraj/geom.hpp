#pragma once

#include "swarmtraj/common.hpp"
#include "swarmtraj/segment_tree.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace swarmtraj
{

struct Aabb
{
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    Aabb() = default;
    Aabb(const Vec3 &lo_, const Vec3 &hi_) : lo(lo_), hi(hi_) {}

    static Aabb empty();
    static Aabb around(const Vec3 &center, double halfWidth);

    bool valid() const { return (lo.array() <= hi.array()).all(); }
    bool contains(const Vec3 &x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
    bool intersects(const Aabb &o) const;
    Aabb intersection(const Aabb &o) const;
    Aabb inflated(double r) const;
    void expand(const Vec3 &x);
    void expand(const Aabb &o);
    Vec3 size() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double volume() const;
};

// Convex region {x : normals.row(k) * x <= offsets(k)} with a strictly interior witness point.
struct HalfspacePolytope
{
    Eigen::MatrixX3d normals;
    Eigen::VectorXd offsets;
    Vec3 interior = Vec3::Zero();

    HalfspacePolytope() = default;
    HalfspacePolytope(Eigen::MatrixX3d n, Eigen::VectorXd b, const Vec3 &witness)
        : normals(std::move(n)), offsets(std::move(b)), interior(witness) {}

    static HalfspacePolytope fromBox(const Aabb &box);

    int faceCount() const { return static_cast<int>(offsets.size()); }

    // min_k (b_k - a_k x); positive strictly inside.
    double depth(const Vec3 &x) const;

    void addHalfspace(const Vec3 &normal, double offset);

    // Stacks the halfspaces of both operands; the witness is left untouched.
    static HalfspacePolytope intersect(const HalfspacePolytope &a, const HalfspacePolytope &b);
};

bool contains(const HalfspacePolytope &poly, const Vec3 &x, double slack = 0.0);

// Analytic center by damped Newton, preceded by a barrier phase-I search when
// the current witness is not strictly feasible.
Vec3 chebyshevLikeCenter(const HalfspacePolytope &poly);

// Vertices through point-hyperplane duality and a convex hull of the dual points.
std::vector<Vec3> enumerateVertices(const HalfspacePolytope &poly, const Vec3 &interior);

// Indices of halfspaces that support at least one vertex (the non-redundant ones).
std::vector<int> activeHalfspaces(const HalfspacePolytope &poly, std::span<const Vec3> vertices,
                                  double tol = 1e-7);

Aabb boundingBox(std::span<const Vec3> points);

class ObstacleMap
{
public:
    enum class Kind
    {
        VoxelGrid,
        PointCloud
    };

    static ObstacleMap voxelGrid(const Vec3 &origin, double resolution, int nx, int ny, int nz,
                                 std::vector<bool> occupancy);
    static ObstacleMap pointCloud(std::vector<Vec3> points, const Aabb &bounds);

    Kind kind() const { return kind_; }
    const Aabb &bounds() const { return bounds_; }
    double resolution() const { return resolution_; }
    const Vec3 &origin() const { return origin_; }
    Eigen::Vector3i dims() const { return dims_; }
    std::size_t obstacleCount() const;

    bool occupied(int i, int j, int k) const;
    Vec3 voxelCenter(int i, int j, int k) const;

    // A voxel is an obstacle iff its center is; raw cloud points have zero volume.
    bool isFree(const Vec3 &x) const;

    // Obstacle points (cloud points or occupied voxel centers) inside the box.
    void collectObstacles(const Aabb &box, std::vector<Vec3> &out) const;
    std::vector<Vec3> allObstacles() const;

private:
    Kind kind_ = Kind::PointCloud;
    Aabb bounds_;
    Vec3 origin_ = Vec3::Zero();
    double resolution_ = 1.0;
    Eigen::Vector3i dims_ = Eigen::Vector3i::Zero();
    std::vector<bool> occupancy_;
    std::vector<Vec3> points_;
    // Bucketed point cloud for box queries.
    double bucketSize_ = 1.0;
    Eigen::Vector3i bucketDims_ = Eigen::Vector3i::Zero();
    std::vector<std::vector<int>> buckets_;
};

// Tangent-plane growth inside local_box; clearance <= 0 selects half a voxel
// for grids and a tiny positive gap for clouds.
HalfspacePolytope generatePolytope(const Vec3 &seed, const ObstacleMap &obstacles,
                                   const Aabb &localBox, double clearance = -1.0);

class PolyMap
{
public:
    PolyMap() = default;
    PolyMap(std::vector<HalfspacePolytope> polytopes, double epsilon, const Aabb &bounds);

    const std::vector<HalfspacePolytope> &polytopes() const { return polytopes_; }
    const HalfspacePolytope &polytope(int id) const { return polytopes_[static_cast<std::size_t>(id)]; }
    const std::vector<Aabb> &boxes() const { return boxes_; }
    const std::vector<std::vector<Vec3>> &vertices() const { return vertices_; }
    std::size_t size() const { return polytopes_.size(); }
    double epsilon() const { return epsilon_; }
    const Aabb &bounds() const { return bounds_; }

    // Ids of every bounding box containing x, ascending.
    std::vector<int> stabAll(const Vec3 &x) const;
    // The containing polytope with the deepest containment, lowest id on ties.
    std::optional<int> stab(const Vec3 &x) const;
    bool inside(const Vec3 &x, double slack = 0.0) const;
    // max over polytopes of the containment depth; negative outside the union.
    double containmentMargin(const Vec3 &x, double searchRadius = 2.0) const;

    bool segmentInside(const Vec3 &a, const Vec3 &b) const;
    std::vector<int> boxesOverlapping(const Aabb &box) const;

private:
    void buildGrid();
    void cellRange(const Aabb &box, Eigen::Vector3i &lo, Eigen::Vector3i &hi) const;

    std::vector<HalfspacePolytope> polytopes_;
    std::vector<Aabb> boxes_;
    std::vector<std::vector<Vec3>> vertices_;
    double epsilon_ = 0.0;
    Aabb bounds_;
    SegmentTreeIndex index_;

    Vec3 gridOrigin_ = Vec3::Zero();
    double cellSize_ = 1.0;
    Eigen::Vector3i cellDims_ = Eigen::Vector3i::Ones();
    std::vector<std::vector<int>> cells_;
};

struct PolyhedronizeConfig
{
    double epsilon = 1e-2;
    double localHalfWidth = 40.0;
    double clearance = -1.0;
    std::size_t attemptBudget = 200000; // draws allowed without ever finding a free sample
    std::size_t confirmSamples = 100000;
    std::size_t maxPolytopes = 200000;
};

struct PolyhedronizeStats
{
    std::size_t samplesDrawn = 0;
    std::size_t seedsAccepted = 0;
    std::size_t confirmRounds = 0;
    double fillEstimate = 0.0;
    double fillStdError = 0.0;
};

PolyMap polyhedronize(const ObstacleMap &obstacles, const PolyhedronizeConfig &config,
                      std::mt19937_64 &rng, PolyhedronizeStats *stats = nullptr);

struct FillEstimate
{
    double fraction = 0.0;
    double stdError = 0.0;
    std::size_t samples = 0;
};

// Fraction of uniformly drawn free points covered by the union.
FillEstimate estimateFill(const PolyMap &map, const ObstacleMap &obstacles, std::size_t samples,
                          std::mt19937_64 &rng);

} // namespace swarmtraj
