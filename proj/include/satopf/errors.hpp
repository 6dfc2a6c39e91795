#pragma once

#include <stdexcept>
#include <string>

namespace satopf {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- network ---
struct DisconnectedGraph : Error {
    using Error::Error;
};
struct DuplicateReference : Error {
    using Error::Error;
};
struct BadLineData : Error {
    using Error::Error;
};
struct UnbalancedInjection : Error {
    using Error::Error;
};
struct SingularSystem : Error {
    using Error::Error;
};

// --- first stage ---
struct InfeasibleFirstStage : Error {
    explicit InfeasibleFirstStage(const std::string& constraint_name, const std::string& detail)
        : Error("infeasible first stage (" + constraint_name + "): " + detail),
          constraint(constraint_name) {}
    std::string constraint;
};
struct EmptyFeasibleSet : Error {
    using Error::Error;
};

// --- recourse ---
struct OverlappingSmoothing : Error {
    using Error::Error;
};
struct ScenarioInfeasible : Error {
    ScenarioInfeasible(double sigma_d_, double lower_, double upper_)
        : Error("scenario infeasible: sigma_d = " + std::to_string(sigma_d_) +
                " outside feasibility interval [" + std::to_string(lower_) + ", " +
                std::to_string(upper_) + "]"),
          sigma_d(sigma_d_), lower(lower_), upper(upper_) {}
    double sigma_d;
    double lower;
    double upper;
};
struct BisectionStall : Error {
    using Error::Error;
};

// --- sensitivity ---
struct DegenerateSensitivity : Error {
    using Error::Error;
};

// --- psg ---
struct InfeasibleStart : Error {
    using Error::Error;
};

// --- evaluation ---
struct ExcessiveInfeasibility : Error {
    using Error::Error;
};

// --- case / config ingestion ---
struct ParseError : Error {
    ParseError(const std::string& what, int line_)
        : Error("parse error at line " + std::to_string(line_) + ": " + what), line(line_) {}
    explicit ParseError(const std::string& what) : Error("parse error: " + what), line(-1) {}
    int line;
};
struct SchemaVersionMismatch : Error {
    using Error::Error;
};

}  // namespace satopf
