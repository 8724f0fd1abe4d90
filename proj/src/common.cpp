#include "swarmtraj/common.hpp"

namespace swarmtraj
{

const char *errorName(ErrorCode code) noexcept
{
    switch (code)
    {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SeedOccupied: return "SeedOccupied";
    case ErrorCode::NoFreeSpace: return "NoFreeSpace";
    case ErrorCode::EmptyInterior: return "EmptyInterior";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::CoverageGap: return "CoverageGap";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SingularAttitude: return "SingularAttitude";
    case ErrorCode::NotInPolytope: return "NotInPolytope";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
    case ErrorCode::ScheduleTimeout: return "ScheduleTimeout";
    case ErrorCode::PostCheckFailure: return "PostCheckFailure";
    case ErrorCode::AuditFailure: return "AuditFailure";
    }
    return "Unknown";
}

} // namespace swarmtraj
