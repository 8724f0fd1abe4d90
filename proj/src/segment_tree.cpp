#include "swarmtraj/segment_tree.hpp"
#include "swarmtraj/geom.hpp"

#include <algorithm>

namespace swarmtraj
{

// Elementary slots over sorted unique endpoints c_0 < ... < c_{k-1}:
// slot 2i is the point c_i, slot 2i+1 the open gap (c_i, c_{i+1}).
struct SegmentTreeIndex::Level
{
    int axis = 0;
    std::vector<double> coords;
    int slots = 0;
    std::vector<std::vector<int>> canon;
    std::vector<std::unique_ptr<Level>> child;

    void build(std::span<const Aabb> boxes, const std::vector<int> &ids, int ax)
    {
        axis = ax;
        coords.clear();
        coords.reserve(ids.size() * 2);
        for (int id : ids)
        {
            coords.push_back(boxes[id].lo(axis));
            coords.push_back(boxes[id].hi(axis));
        }
        std::sort(coords.begin(), coords.end());
        coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        slots = 2 * static_cast<int>(coords.size()) - 1;
        canon.assign(static_cast<std::size_t>(4 * slots), {});

        for (int id : ids)
        {
            const int a = slotOf(boxes[id].lo(axis));
            const int b = slotOf(boxes[id].hi(axis));
            insert(1, 0, slots - 1, a, b, id);
        }

        if (axis < 2)
        {
            child.resize(canon.size());
            for (std::size_t node = 0; node < canon.size(); node++)
            {
                if (!canon[node].empty())
                {
                    child[node] = std::make_unique<Level>();
                    child[node]->build(boxes, canon[node], axis + 1);
                    std::vector<int>().swap(canon[node]);
                }
            }
        }
    }

    int slotOf(double endpoint) const
    {
        const auto it = std::lower_bound(coords.begin(), coords.end(), endpoint);
        return 2 * static_cast<int>(it - coords.begin());
    }

    void insert(int node, int l, int r, int ql, int qr, int id)
    {
        if (qr < l || r < ql)
        {
            return;
        }
        if (ql <= l && r <= qr)
        {
            canon[static_cast<std::size_t>(node)].push_back(id);
            return;
        }
        const int m = (l + r) / 2;
        insert(2 * node, l, m, ql, qr, id);
        insert(2 * node + 1, m + 1, r, ql, qr, id);
    }

    void query(const Eigen::Vector3d &x, std::vector<int> &out) const
    {
        const double v = x(axis);
        if (coords.empty() || v < coords.front() || v > coords.back())
        {
            return;
        }
        const auto it = std::upper_bound(coords.begin(), coords.end(), v);
        const int i = static_cast<int>(it - coords.begin()) - 1;
        const int slot = coords[static_cast<std::size_t>(i)] == v ? 2 * i : 2 * i + 1;

        int node = 1, l = 0, r = slots - 1;
        while (true)
        {
            visit(node, x, out);
            if (l == r)
            {
                break;
            }
            const int m = (l + r) / 2;
            if (slot <= m)
            {
                node = 2 * node;
                r = m;
            }
            else
            {
                node = 2 * node + 1;
                l = m + 1;
            }
        }
    }

    void visit(int node, const Eigen::Vector3d &x, std::vector<int> &out) const
    {
        const auto n = static_cast<std::size_t>(node);
        if (axis == 2)
        {
            out.insert(out.end(), canon[n].begin(), canon[n].end());
        }
        else if (child[n])
        {
            child[n]->query(x, out);
        }
    }
};

SegmentTreeIndex::SegmentTreeIndex() = default;
SegmentTreeIndex::~SegmentTreeIndex() = default;
SegmentTreeIndex::SegmentTreeIndex(SegmentTreeIndex &&) noexcept = default;
SegmentTreeIndex &SegmentTreeIndex::operator=(SegmentTreeIndex &&) noexcept = default;

void SegmentTreeIndex::build(std::span<const Aabb> boxes)
{
    root_.reset();
    if (boxes.empty())
    {
        return;
    }
    std::vector<int> ids(boxes.size());
    for (std::size_t i = 0; i < ids.size(); i++)
    {
        ids[i] = static_cast<int>(i);
    }
    root_ = std::make_unique<Level>();
    root_->build(boxes, ids, 0);
}

std::vector<int> SegmentTreeIndex::stab(const Eigen::Vector3d &x) const
{
    std::vector<int> out;
    if (root_)
    {
        root_->query(x, out);
        std::sort(out.begin(), out.end());
    }
    return out;
}

} // namespace swarmtraj
