#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace swarmtraj
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode : int
{
    Ok = 0,
    InvalidArgument,
    Io,
    InvalidConfig,
    SeedOccupied,
    NoFreeSpace,
    EmptyInterior,
    Unbounded,
    NoPath,
    CoverageGap,
    EmptyIntersection,
    SingularSystem,
    SingularAttitude,
    NotInPolytope,
    LineSearchFailure,
    ScheduleTimeout,
    PostCheckFailure,
    AuditFailure,
};

const char *errorName(ErrorCode code) noexcept;

// All recoverable failures in the library are reported through this type.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(errorName(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace swarmtraj
