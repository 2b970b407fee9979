#pragma once

#include <stdexcept>
#include <string>

namespace dshell {

enum class ErrorCode {
    invalid_argument,
    singular_point,
    non_contractive,
    numerical_failure,
    off_surface,
    point_too_close_to_surface,
    degenerate_quadrature,
    near_critical_coupling,
    singular_boundary_inverse,
    critical_coupling,
    dense_cap_exceeded,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// throws Error(invalid_argument, msg) unless cond holds
void require(bool cond, const std::string& msg);

}  // namespace dshell
