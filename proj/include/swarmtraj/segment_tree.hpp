#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace swarmtraj
{

struct Aabb;

// Three nested levels of segment trees over the x, y and z extents of a set of
// closed boxes. A point query walks one root-to-leaf path per level and returns
// each containing box exactly once.
class SegmentTreeIndex
{
public:
    SegmentTreeIndex();
    ~SegmentTreeIndex();
    SegmentTreeIndex(SegmentTreeIndex &&) noexcept;
    SegmentTreeIndex &operator=(SegmentTreeIndex &&) noexcept;
    SegmentTreeIndex(const SegmentTreeIndex &) = delete;
    SegmentTreeIndex &operator=(const SegmentTreeIndex &) = delete;

    void build(std::span<const Aabb> boxes);

    // Ids of boxes containing x, ascending.
    std::vector<int> stab(const Eigen::Vector3d &x) const;

    bool empty() const { return root_ == nullptr; }

private:
    struct Level;
    std::unique_ptr<Level> root_;
};

} // namespace swarmtraj
