#pragma once

#include <stdexcept>
#include <string>

namespace gwel {

// Base class for all library errors. Subclasses map onto CLI exit codes:
// configuration errors exit 2, budget errors exit 3, anything else 1.
// what() is prefixed with the error name, e.g. "InvalidPmf: ...".
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

#define GWEL_DEFINE_ERROR(Name, Base)                                   \
    class Name : public Base {                                          \
    public:                                                             \
        explicit Name(const std::string& msg) : Base(#Name ": " + msg) {} \
    }

// model-config
GWEL_DEFINE_ERROR(InvalidPmf, ConfigError);
GWEL_DEFINE_ERROR(SubcriticalOrCritical, ConfigError);
GWEL_DEFINE_ERROR(ZeroOffspring, ConfigError);
GWEL_DEFINE_ERROR(MissingMoment, ConfigError);

// tree engine
GWEL_DEFINE_ERROR(DepthOverflow, BudgetError);
GWEL_DEFINE_ERROR(InvalidOption, ConfigError);
GWEL_DEFINE_ERROR(TruncationTooDeep, ConfigError);

// pool dynamics
GWEL_DEFINE_ERROR(PoolTooSmall, ConfigError);
GWEL_DEFINE_ERROR(BudgetExceeded, BudgetError);
GWEL_DEFINE_ERROR(MissingInverseMoment, ConfigError);

// oracles
GWEL_DEFINE_ERROR(Disconnected, Error);
GWEL_DEFINE_ERROR(SingularSystem, Error);
GWEL_DEFINE_ERROR(NotATree, Error);
GWEL_DEFINE_ERROR(LeavesAtMixedDepth, Error);

// harness / CLI
GWEL_DEFINE_ERROR(InsufficientSamples, Error);
GWEL_DEFINE_ERROR(DubucViolated, ConfigError);
GWEL_DEFINE_ERROR(MissingRun, ConfigError);
GWEL_DEFINE_ERROR(InvalidConfig, ConfigError);

#undef GWEL_DEFINE_ERROR

} // namespace gwel
