#include "swarmtraj/scenarios.hpp"

#include <cmath>
#include <random>

namespace swarmtraj::scenarios
{

namespace
{

template <typename Pred>
ObstacleMap rasterize(double res, int nx, int ny, int nz, Pred occupied)
{
    std::vector<bool> occ(static_cast<std::size_t>(nx) * ny * nz, false);
    for (int k = 0; k < nz; k++)
        for (int j = 0; j < ny; j++)
            for (int i = 0; i < nx; i++)
            {
                const Vec3 c((i + 0.5) * res, (j + 0.5) * res, (k + 0.5) * res);
                occ[(static_cast<std::size_t>(k) * ny + j) * nx + i] = occupied(c);
            }
    return ObstacleMap::voxelGrid(Vec3::Zero(), res, nx, ny, nz, std::move(occ));
}

} // namespace

ObstacleMap twoRooms()
{
    return rasterize(0.5, 40, 20, 8, [](const Vec3 &c) {
        const bool wall = c(0) > 9.5 && c(0) < 10.5;
        const bool door = c(1) > 4.0 && c(1) < 6.0 && c(2) < 3.0;
        return wall && !door;
    });
}

ObstacleMap pillarField(std::uint64_t seed, int pillars)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(50.0, 250.0), rad(5.0, 10.0);
    std::vector<Eigen::Vector3d> cyl; // x, y, radius
    while (static_cast<int>(cyl.size()) < pillars)
    {
        const Eigen::Vector3d p(pos(rng), pos(rng), rad(rng));
        bool clash = false;
        for (const auto &q : cyl)
            clash = clash || (p.head<2>() - q.head<2>()).norm() < p(2) + q(2) + 15.0;
        if (!clash)
            cyl.push_back(p);
    }
    return rasterize(2.0, 150, 150, 30, [&](const Vec3 &c) {
        for (const auto &q : cyl)
            if ((c.head<2>() - q.head<2>()).norm() <= q(2))
                return true;
        return false;
    });
}

ObstacleMap narrowGap()
{
    return rasterize(2.0, 80, 40, 15, [](const Vec3 &c) {
        const bool wall = c(0) > 76.0 && c(0) < 84.0;
        const bool slot = c(1) > 30.0 && c(1) < 50.0;
        return wall && !slot;
    });
}

std::vector<Mission> pillarMissions(std::uint64_t seed, int count, double spacing, double separation, double vertical)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> along(20.0, 280.0), alt(10.0, 50.0);
    auto wdist = [&](const Vec3 &a, const Vec3 &b) {
        const Vec3 d = a - b;
        return std::sqrt(d(0) * d(0) + d(1) * d(1) + vertical * d(2) * d(2));
    };
    auto onSide = [&](int side) {
        const double u = along(rng), z = alt(rng);
        switch (side)
        {
        case 0:
            return Vec3(15.0, u, z);
        case 1:
            return Vec3(285.0, u, z);
        case 2:
            return Vec3(u, 15.0, z);
        default:
            return Vec3(u, 285.0, z);
        }
    };
    std::vector<Mission> out;
    std::vector<Vec3> used;
    auto clear = [&](const Vec3 &p) {
        for (const auto &q : used)
            if (wdist(p, q) < separation)
                return false;
        return true;
    };
    for (int k = 0; k < count; k++)
    {
        const int side = k % 4;
        Vec3 a, b;
        do
        {
            a = onSide(side);
        } while (!clear(a));
        used.push_back(a);
        do
        {
            b = onSide(side ^ 1);
        } while (!clear(b));
        used.push_back(b);
        out.push_back({k, a, b, spacing * k});
    }
    return out;
}

std::vector<Mission> gapMissions(int count)
{
    std::vector<Mission> out;
    const int west = (count + 1) / 2;
    for (int k = 0; k < count; k++)
    {
        const bool fromWest = k < west;
        const int slot = fromWest ? k : k - west;
        const int lanes = fromWest ? west : count - west;
        const double y = 40.0 + (slot - 0.5 * (lanes - 1)) * 16.0;
        // goals lie beyond the other side's starts
        const Vec3 start = fromWest ? Vec3(20.0, y, 15.0) : Vec3(140.0, y, 15.0);
        const Vec3 goal = fromWest ? Vec3(150.0, y, 15.0) : Vec3(10.0, y, 15.0);
        out.push_back({k, start, goal, 0.0});
    }
    return out;
}

} // namespace swarmtraj::scenarios
