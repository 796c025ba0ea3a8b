#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mmv {

/// Base class for all domain errors. `name()` is a stable identifier used by
/// the CLI to report the failure class on stderr (exit-code contract).
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(name + ": " + what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define MMV_DEFINE_ERROR(ClassName)                                     \
    class ClassName final : public Error {                              \
    public:                                                             \
        explicit ClassName(const std::string& what)                     \
            : Error(#ClassName, what) {}                                \
    }

MMV_DEFINE_ERROR(DimensionMismatch);
MMV_DEFINE_ERROR(SingularCovariance);
MMV_DEFINE_ERROR(InvalidParameter);
MMV_DEFINE_ERROR(NonConicSet);
MMV_DEFINE_ERROR(NotSupported);
MMV_DEFINE_ERROR(SolverNonconvergence);
MMV_DEFINE_ERROR(MembershipViolation);
MMV_DEFINE_ERROR(TimeOutOfRange);
MMV_DEFINE_ERROR(NonpositiveDensity);
MMV_DEFINE_ERROR(ParameterOverflow);
MMV_DEFINE_ERROR(ConstraintViolation);
MMV_DEFINE_ERROR(InsufficientPaths);
MMV_DEFINE_ERROR(SaddleViolation);
MMV_DEFINE_ERROR(EquivalenceViolation);
MMV_DEFINE_ERROR(ConfigParseError);

#undef MMV_DEFINE_ERROR

}  // namespace mmv
