#pragma once

#include "swarmtraj/geom.hpp"
#include "swarmtraj/optimize.hpp"

#include <cstdint>
#include <vector>

namespace swarmtraj::scenarios
{

// 20 x 10 x 4 m, 0.5 m voxels: two rooms split at x = 10 by a wall with a 2 x 3 m door.
ObstacleMap twoRooms();

// 300 x 300 x 60 m, 2 m voxels, vertical pillars of random radius away from the border.
ObstacleMap pillarField(std::uint64_t seed, int pillars = 20);

// 160 x 80 x 30 m, 2 m voxels: a wall at x = 80 with a single 20 m wide slot.
ObstacleMap narrowGap();

// Perimeter-to-perimeter crossings of the pillar field, requested every `spacing` seconds.
// Endpoints stay `separation` apart from each other in the W-norm.
std::vector<Mission> pillarMissions(std::uint64_t seed, int count = 10, double spacing = 4.0,
                                    double separation = 20.0, double vertical = 0.5);

// Half the vehicles start west of the wall and half east, all at 15 m and requesting t = 0.
std::vector<Mission> gapMissions(int count = 8);

} // namespace swarmtraj::scenarios
