#pragma once

#include "swarmtraj/fleet.hpp"
#include "swarmtraj/geom.hpp"
#include "swarmtraj/optimize.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swarmtraj
{

struct RobustnessConfig
{
    std::vector<double> grid{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
    int trials = 10;
    WarpRegime regime = WarpRegime::TwoSided;
    double maxRate = 0.5;
    double sampleStep = 0.02;
};

struct RunConfig
{
    PlannerConfig planner;
    PolyhedronizeConfig polyhedronize;
    RobustnessConfig robustness;
    std::optional<Aabb> cloudBounds; // bounds of point-cloud maps
    double profileRate = 100.0;      // Hz
    std::uint64_t seed = 1;

    // Vehicle, limits, weights and margins from the reference parameter list.
    static RunConfig defaults();
    void validate() const;
};

// Keys missing from the document keep their defaults; unknown keys are rejected.
RunConfig parseRunConfig(const std::string &text);
RunConfig loadRunConfig(const std::string &path);
std::string dumpRunConfig(const RunConfig &cfg);

} // namespace swarmtraj
