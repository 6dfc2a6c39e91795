#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "satopf/costs.hpp"
#include "satopf/first_stage.hpp"
#include "satopf/network.hpp"
#include "satopf/uncertainty.hpp"

namespace satopf {

/// A value that is either a number or the token `auto`, resolved at build
/// time (auto p0max: p^max for regular units, mu + 5*sigma for wind; auto
/// reserve bounds: the resolved p0max).
struct AutoValue {
    bool is_auto = true;
    double value = 0.0;

    static AutoValue automatic() { return AutoValue{}; }
    static AutoValue fixed(double v) { return AutoValue{false, v}; }
};

struct CaseLine {
    int from = 0, to = 0;
    double susceptance = 0.0, flow_limit = 0.0;
};

struct CaseGen {
    int bus = 0;
    GenKind kind = GenKind::regular;
    double cost = 0.0;      // c_i, ignored for wind
    double p_min = 0.0;
    double capacity = 0.0;  // p^max for regular, mean capacity mu_w for wind
    double sigma = 0.0;     // capacity std, wind only
    double p0_min = 0.0;
    AutoValue p0_max, r_plus_max, r_minus_max;
    bool reserve = true;    // membership in G^res
};

struct CaseLoad {
    int bus = 0;
    double mean = 0.0;
    double sigma = 0.0;
};

/// Parsed case file, prior to variant resolution. Emission is canonical:
/// emit(parse(text)) == text for files written by the emitter.
struct CaseData {
    std::string name = "case";
    double base_mva = 100.0;
    int num_buses = 0;
    int variant = 1;  // section-V-B case semantics
    std::vector<CaseLine> lines;
    std::vector<CaseGen> generators;
    std::vector<CaseLoad> loads;
};

CaseData parse_case(std::istream& in);
CaseData parse_case_string(const std::string& text);
CaseData load_case_file(const std::string& path);
std::string emit_case(const CaseData& data);
std::uint64_t case_hash(const CaseData& data);

/// Built case: validated network, uncertainty model, and the metadata needed
/// to assemble the feasible set (participation pins for case-2 wind).
struct CaseBundle {
    Network net;
    UncertaintyModel model;
    std::string name;
    int variant = 1;
    double epsilon = 0.0;           // resolved participation floor
    Eigen::VectorXd alpha_fixed;    // per generator, NaN = free
    std::uint64_t source_hash = 0;  // hash of the canonical case text
};

/// Resolve auto fields and apply the case-variant semantics:
/// variant 2 pins wind participation at 0.1*epsilon, drops wind from G^res
/// and waives its spill penalty; variant 3 folds wind into the loads as
/// negative means with combined standard deviations.
CaseBundle build_case(const CaseData& data);

/// Parse + build. Accepts a filesystem path or "bundled:<name>".
CaseBundle load_case(const std::string& path_or_bundled);

FeasibleSetSpec make_feasible_spec(const CaseBundle& bundle);

/// Bundled synthetic instances (not the paper's third-party data files).
std::vector<std::string> bundled_case_names();
CaseData bundled_case(const std::string& name);

/// Synthetic 118-bus instance following the published construction recipe:
/// a base grid of 54 regular units, demand scaled by 1.5, line limits scaled
/// by 0.75, and 25 added wind units sized so the mean wind output equals
/// `wind_penetration` times the mean system load.
CaseData make_case118_synthetic(double wind_penetration = 0.25);

}  // namespace satopf
