#include "dshell/errors.hpp"

namespace dshell {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::singular_point: return "SingularPoint";
    case ErrorCode::non_contractive: return "NonContractive";
    case ErrorCode::numerical_failure: return "NumericalFailure";
    case ErrorCode::off_surface: return "OffSurface";
    case ErrorCode::point_too_close_to_surface: return "PointTooCloseToSurface";
    case ErrorCode::degenerate_quadrature: return "DegenerateQuadrature";
    case ErrorCode::near_critical_coupling: return "NearCriticalCoupling";
    case ErrorCode::singular_boundary_inverse: return "SingularBoundaryInverse";
    case ErrorCode::critical_coupling: return "CriticalCoupling";
    case ErrorCode::dense_cap_exceeded: return "DenseCapExceeded";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

void require(bool cond, const std::string& msg)
{
    if (!cond) throw Error(ErrorCode::invalid_argument, msg);
}

}  // namespace dshell
