#include "satopf/case_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "satopf/util.hpp"

namespace satopf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt_auto(const AutoValue& v) { return v.is_auto ? "auto" : fmt_double(v.value); }

double parse_double(const std::string& s, int line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad numeric value '" + s + "'", line);
    return v;
}

int parse_int(const std::string& s, int line) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad integer value '" + s + "'", line);
    return v;
}

AutoValue parse_auto(const std::string& s, int line) {
    if (s == "auto") return AutoValue::automatic();
    return AutoValue::fixed(parse_double(s, line));
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

/// key=value fields after the record keyword.
std::map<std::string, std::string> fields_of(const std::vector<std::string>& tokens,
                                             std::size_t first, int line) {
    std::map<std::string, std::string> out;
    for (std::size_t i = first; i < tokens.size(); ++i) {
        const auto pos = tokens[i].find('=');
        if (pos == std::string::npos)
            throw ParseError("expected key=value, got '" + tokens[i] + "'", line);
        out[tokens[i].substr(0, pos)] = tokens[i].substr(pos + 1);
    }
    return out;
}

std::string take(std::map<std::string, std::string>& fields, const std::string& key, int line) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ParseError("missing required field '" + key + "'", line);
    std::string v = it->second;
    fields.erase(it);
    return v;
}

std::string take_or(std::map<std::string, std::string>& fields, const std::string& key,
                    const std::string& fallback) {
    const auto it = fields.find(key);
    if (it == fields.end()) return fallback;
    std::string v = it->second;
    fields.erase(it);
    return v;
}

void expect_empty(const std::map<std::string, std::string>& fields, int line) {
    if (!fields.empty()) throw ParseError("unknown field '" + fields.begin()->first + "'", line);
}

}  // namespace

CaseData parse_case(std::istream& in) {
    CaseData data;
    std::string raw;
    int line_no = 0;
    bool saw_schema = false, saw_buses = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash_pos = raw.find('#');
        if (hash_pos != std::string::npos) raw.erase(hash_pos);
        const std::vector<std::string> tok = tokenize(raw);
        if (tok.empty()) continue;
        if (!saw_schema) {
            if (tok[0] != "schema" || tok.size() != 3 || tok[1] != "satopf-case")
                throw ParseError("file must start with 'schema satopf-case <version>'", line_no);
            if (tok[2] != "1")
                throw SchemaVersionMismatch("unsupported case schema version " + tok[2]);
            saw_schema = true;
            continue;
        }
        if (tok[0] == "name") {
            if (tok.size() != 2) throw ParseError("name takes one value", line_no);
            data.name = tok[1];
        } else if (tok[0] == "base_mva") {
            if (tok.size() != 2) throw ParseError("base_mva takes one value", line_no);
            data.base_mva = parse_double(tok[1], line_no);
        } else if (tok[0] == "buses") {
            if (tok.size() != 2) throw ParseError("buses takes one value", line_no);
            data.num_buses = parse_int(tok[1], line_no);
            saw_buses = true;
        } else if (tok[0] == "variant") {
            if (tok.size() != 2) throw ParseError("variant takes one value", line_no);
            data.variant = parse_int(tok[1], line_no);
            if (data.variant < 1 || data.variant > 3)
                throw ParseError("variant must be 1, 2 or 3", line_no);
        } else if (tok[0] == "line") {
            auto f = fields_of(tok, 1, line_no);
            CaseLine l;
            l.from = parse_int(take(f, "from", line_no), line_no);
            l.to = parse_int(take(f, "to", line_no), line_no);
            l.susceptance = parse_double(take(f, "b", line_no), line_no);
            l.flow_limit = parse_double(take(f, "fmax", line_no), line_no);
            expect_empty(f, line_no);
            data.lines.push_back(l);
        } else if (tok[0] == "gen") {
            auto f = fields_of(tok, 1, line_no);
            CaseGen g;
            g.bus = parse_int(take(f, "bus", line_no), line_no);
            const std::string kind = take(f, "kind", line_no);
            if (kind == "regular")
                g.kind = GenKind::regular;
            else if (kind == "wind")
                g.kind = GenKind::wind;
            else
                throw ParseError("generator kind must be regular or wind", line_no);
            if (g.kind == GenKind::regular) {
                g.cost = parse_double(take(f, "cost", line_no), line_no);
                g.capacity = parse_double(take(f, "pmax", line_no), line_no);
            } else {
                g.capacity = parse_double(take(f, "mu", line_no), line_no);
                g.sigma = parse_double(take(f, "sigma", line_no), line_no);
            }
            g.p_min = parse_double(take_or(f, "pmin", "0"), line_no);
            g.p0_min = parse_double(take_or(f, "p0min", "0"), line_no);
            g.p0_max = parse_auto(take_or(f, "p0max", "auto"), line_no);
            g.r_plus_max = parse_auto(take_or(f, "rpmax", "auto"), line_no);
            g.r_minus_max = parse_auto(take_or(f, "rmmax", "auto"), line_no);
            g.reserve = parse_int(take_or(f, "res", "1"), line_no) != 0;
            expect_empty(f, line_no);
            data.generators.push_back(g);
        } else if (tok[0] == "load") {
            auto f = fields_of(tok, 1, line_no);
            CaseLoad l;
            l.bus = parse_int(take(f, "bus", line_no), line_no);
            l.mean = parse_double(take(f, "mean", line_no), line_no);
            l.sigma = parse_double(take_or(f, "sigma", "0"), line_no);
            expect_empty(f, line_no);
            data.loads.push_back(l);
        } else {
            throw ParseError("unknown record '" + tok[0] + "'", line_no);
        }
    }
    if (!saw_schema) throw ParseError("empty case file");
    if (!saw_buses) throw ParseError("case file declares no buses");
    return data;
}

CaseData parse_case_string(const std::string& text) {
    std::istringstream ss(text);
    return parse_case(ss);
}

CaseData load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file '" + path + "'");
    return parse_case(in);
}

std::string emit_case(const CaseData& data) {
    std::ostringstream out;
    out << "schema satopf-case 1\n";
    out << "name " << data.name << "\n";
    out << "base_mva " << fmt_double(data.base_mva) << "\n";
    out << "buses " << data.num_buses << "\n";
    out << "variant " << data.variant << "\n";
    for (const CaseLine& l : data.lines)
        out << "line from=" << l.from << " to=" << l.to << " b=" << fmt_double(l.susceptance)
            << " fmax=" << fmt_double(l.flow_limit) << "\n";
    for (const CaseGen& g : data.generators) {
        out << "gen bus=" << g.bus;
        if (g.kind == GenKind::regular)
            out << " kind=regular cost=" << fmt_double(g.cost) << " pmax="
                << fmt_double(g.capacity);
        else
            out << " kind=wind mu=" << fmt_double(g.capacity) << " sigma="
                << fmt_double(g.sigma);
        out << " pmin=" << fmt_double(g.p_min) << " p0min=" << fmt_double(g.p0_min)
            << " p0max=" << fmt_auto(g.p0_max) << " rpmax=" << fmt_auto(g.r_plus_max)
            << " rmmax=" << fmt_auto(g.r_minus_max) << " res=" << (g.reserve ? 1 : 0) << "\n";
    }
    for (const CaseLoad& l : data.loads)
        out << "load bus=" << l.bus << " mean=" << fmt_double(l.mean) << " sigma="
            << fmt_double(l.sigma) << "\n";
    return out.str();
}

std::uint64_t case_hash(const CaseData& data) { return fnv1a(emit_case(data)); }

CaseBundle build_case(const CaseData& input) {
    CaseData d = input;

    if (d.variant == 3) {
        // Non-dispatchable wind acts as negative load with combined std.
        for (const CaseGen& g : d.generators) {
            if (g.kind != GenKind::wind) continue;
            auto it = std::find_if(d.loads.begin(), d.loads.end(),
                                   [&](const CaseLoad& l) { return l.bus == g.bus; });
            if (it == d.loads.end()) {
                d.loads.push_back({g.bus, -g.capacity, g.sigma});
            } else {
                it->mean -= g.capacity;
                it->sigma = std::hypot(it->sigma, g.sigma);
            }
        }
        d.generators.erase(std::remove_if(d.generators.begin(), d.generators.end(),
                                          [](const CaseGen& g) { return g.kind == GenKind::wind; }),
                           d.generators.end());
    }

    const int g_count = static_cast<int>(d.generators.size());
    const double epsilon = std::min(0.001, 0.01 / std::max(1, g_count));

    NetworkData nd;
    nd.base_mva = d.base_mva;
    nd.buses.resize(static_cast<std::size_t>(d.num_buses));
    for (int i = 0; i < d.num_buses; ++i) nd.buses[static_cast<std::size_t>(i)] = {i, i == 0};
    for (const CaseLine& l : d.lines)
        nd.lines.push_back({l.from, l.to, l.susceptance, l.flow_limit});

    Eigen::VectorXd alpha_fixed = Eigen::VectorXd::Constant(g_count, kNaN);
    for (int i = 0; i < g_count; ++i) {
        const CaseGen& cg = d.generators[static_cast<std::size_t>(i)];
        Generator gen;
        gen.bus = cg.bus;
        gen.kind = cg.kind;
        gen.p_min = cg.p_min;
        gen.p_max = cg.capacity;
        gen.unit_cost = cg.kind == GenKind::regular ? cg.cost : 0.0;
        gen.p0_lower = cg.p0_min;
        const double auto_p0max =
            cg.kind == GenKind::regular ? cg.capacity : cg.capacity + 5.0 * cg.sigma;
        gen.p0_upper = cg.p0_max.is_auto ? auto_p0max : cg.p0_max.value;
        gen.r_plus_max = cg.r_plus_max.is_auto ? gen.p0_upper : cg.r_plus_max.value;
        gen.r_minus_max = cg.r_minus_max.is_auto ? gen.p0_upper : cg.r_minus_max.value;
        gen.in_reserve_set = cg.reserve;
        if (d.variant == 2 && cg.kind == GenKind::wind) {
            gen.in_reserve_set = false;
            gen.free_spill = true;
            alpha_fixed[i] = 0.1 * epsilon;
        }
        nd.generators.push_back(gen);
    }
    for (const CaseLoad& l : d.loads) nd.loads.push_back({l.bus, l.mean});

    CaseBundle bundle{Network(std::move(nd)), UncertaintyModel{}, d.name, d.variant, epsilon,
                      alpha_fixed, case_hash(input)};

    bundle.model.load_sigma.resize(static_cast<Eigen::Index>(d.loads.size()));
    for (std::size_t i = 0; i < d.loads.size(); ++i)
        bundle.model.load_sigma[static_cast<Eigen::Index>(i)] = d.loads[i].sigma;
    const int w = bundle.net.num_wind();
    bundle.model.wind_mean.resize(w);
    bundle.model.wind_sigma.resize(w);
    for (int j = 0; j < w; ++j) {
        int count = -1;
        for (const CaseGen& cg : d.generators) {
            if (cg.kind == GenKind::wind && ++count == j) {
                bundle.model.wind_mean[j] = cg.capacity;
                bundle.model.wind_sigma[j] = cg.sigma;
                break;
            }
        }
    }
    return bundle;
}

CaseBundle load_case(const std::string& path_or_bundled) {
    constexpr std::string_view prefix = "bundled:";
    if (path_or_bundled.rfind(prefix, 0) == 0)
        return build_case(bundled_case(path_or_bundled.substr(prefix.size())));
    return build_case(load_case_file(path_or_bundled));
}

FeasibleSetSpec make_feasible_spec(const CaseBundle& bundle) {
    FeasibleSetSpec spec = FeasibleSetSpec::from_network(bundle.net, bundle.epsilon);
    spec.alpha_fixed = bundle.alpha_fixed;
    return spec;
}

// --- bundled instances -------------------------------------------------

namespace {

CaseData make_case2() {
    CaseData d;
    d.name = "case2";
    d.num_buses = 2;
    d.lines = {{0, 1, 5.0, 1.5}};
    CaseGen g1;
    g1.bus = 0;
    g1.cost = 10.0;
    g1.capacity = 2.0;
    CaseGen g2;
    g2.bus = 1;
    g2.cost = 20.0;
    g2.capacity = 2.0;
    d.generators = {g1, g2};
    d.loads = {{0, 0.6, 0.06}, {1, 0.6, 0.06}};
    return d;
}

CaseData make_case4_wind() {
    CaseData d;
    d.name = "case4_wind";
    d.num_buses = 4;
    d.lines = {{0, 1, 5.0, 0.8}, {1, 3, 5.0, 0.8}, {3, 2, 5.0, 0.8},
               {2, 0, 5.0, 0.55}, {0, 3, 3.0, 0.47}};
    CaseGen cheap;
    cheap.bus = 0;
    cheap.cost = 10.0;
    cheap.capacity = 3.0;
    CaseGen dear;
    dear.bus = 1;
    dear.cost = 25.0;
    dear.capacity = 2.0;
    // wind sits at the stressed load bus: using it relieves the import lines
    CaseGen wind;
    wind.bus = 3;
    wind.kind = GenKind::wind;
    wind.capacity = 1.0;
    wind.sigma = 0.15;
    d.generators = {cheap, dear, wind};
    d.loads = {{1, 0.8, 0.08}, {2, 0.3, 0.03}, {3, 1.2, 0.12}};
    return d;
}

CaseData make_case6_synthetic() {
    CaseData d;
    d.name = "case6_synthetic";
    d.num_buses = 6;
    d.lines = {{0, 1, 4.0, 1.0}, {0, 3, 6.0, 1.1}, {1, 2, 4.0, 0.9}, {1, 3, 5.0, 1.0},
               {2, 4, 4.0, 0.9}, {3, 4, 5.0, 0.8}, {4, 5, 3.0, 0.6}, {2, 5, 4.0, 0.7}};
    CaseGen g1;
    g1.bus = 0;
    g1.cost = 12.0;
    g1.capacity = 2.2;
    CaseGen wind;
    wind.bus = 1;
    wind.kind = GenKind::wind;
    wind.capacity = 1.28;  // half the mean system load
    wind.sigma = 0.128;
    CaseGen g3;
    g3.bus = 2;
    g3.cost = 18.0;
    g3.capacity = 1.8;
    d.generators = {g1, wind, g3};
    d.loads = {{3, 0.9, 0.09}, {4, 1.0, 0.1}, {5, 0.66, 0.066}};
    return d;
}

double unit_hash(std::uint64_t key) {
    return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

}  // namespace

CaseData make_case118_synthetic(double wind_penetration) {
    CaseData d;
    d.name = "case118_synthetic";
    d.num_buses = 118;
    const int n = 118;

    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        d.lines.push_back({i, j, 3.0 + 4.0 * unit_hash(1000u + static_cast<std::uint64_t>(i)), 1.0});
    }
    for (int i = 0; i + 13 < n; i += 3)
        d.lines.push_back(
            {i, i + 13, 2.0 + 3.0 * unit_hash(2000u + static_cast<std::uint64_t>(i)), 1.0});

    // Demand already includes the +50% scaling of the construction recipe.
    double total_demand = 0.0;
    for (int i = 0; i < n; ++i) {
        const double base = 0.2 + 0.3 * unit_hash(3000u + static_cast<std::uint64_t>(i));
        const double mean = 1.5 * base;
        total_demand += mean;
        d.loads.push_back({i, mean, 0.1 * mean});
    }

    std::vector<char> used(static_cast<std::size_t>(n), 0);
    const int n_regular = 54;
    double total_cap = 0.0;
    std::vector<double> cap_shape(n_regular);
    for (int k = 0; k < n_regular; ++k) {
        cap_shape[static_cast<std::size_t>(k)] =
            0.5 + unit_hash(4000u + static_cast<std::uint64_t>(k));
        total_cap += cap_shape[static_cast<std::size_t>(k)];
    }
    for (int k = 0; k < n_regular; ++k) {
        CaseGen g;
        g.bus = (k * n) / n_regular;
        used[static_cast<std::size_t>(g.bus)] = 1;
        g.cost = 10.0 + 30.0 * unit_hash(5000u + static_cast<std::uint64_t>(k));
        // Regular capacity covers 1.7x the scaled demand for wide recourse.
        g.capacity = 1.7 * total_demand * cap_shape[static_cast<std::size_t>(k)] / total_cap;
        d.generators.push_back(g);
    }

    const int n_wind = 25;
    const double wind_each = wind_penetration * total_demand / n_wind;
    int placed = 0;
    for (int probe = 1; placed < n_wind && probe < 4 * n; ++probe) {
        const int bus = (probe * 9 + 5) % n;
        if (used[static_cast<std::size_t>(bus)]) continue;
        used[static_cast<std::size_t>(bus)] = 1;
        CaseGen g;
        g.bus = bus;
        g.kind = GenKind::wind;
        g.capacity = wind_each;
        g.sigma = 0.1 * wind_each;
        d.generators.push_back(g);
        ++placed;
    }

    // Size the line limits from a proportional dispatch, then apply the
    // recipe's 25% reduction.
    {
        NetworkData nd;
        nd.buses.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) nd.buses[static_cast<std::size_t>(i)] = {i, i == 0};
        for (const CaseLine& l : d.lines)
            nd.lines.push_back({l.from, l.to, l.susceptance, 1.0});
        Network net(std::move(nd));
        double cap_sum = 0.0;
        for (const CaseGen& g : d.generators) cap_sum += g.capacity;
        Eigen::VectorXd injection = Eigen::VectorXd::Zero(n);
        for (const CaseGen& g : d.generators)
            injection[g.bus] += g.capacity / cap_sum * total_demand;
        for (const CaseLoad& l : d.loads) injection[l.bus] -= l.mean;
        const Eigen::VectorXd theta = net.solve_dc_flow(injection);
        const Eigen::VectorXd flows = net.line_flows(theta);
        for (std::size_t e = 0; e < d.lines.size(); ++e)
            d.lines[e].flow_limit =
                0.75 * (1.5 * std::abs(flows[static_cast<Eigen::Index>(e)]) + 0.3);
    }
    return d;
}

std::vector<std::string> bundled_case_names() {
    return {"case2", "case4_wind", "case6_synthetic", "case118_synthetic"};
}

CaseData bundled_case(const std::string& name) {
    if (name == "case2") return make_case2();
    if (name == "case4_wind") return make_case4_wind();
    if (name == "case6_synthetic") return make_case6_synthetic();
    if (name == "case118_synthetic") return make_case118_synthetic();
    throw ParseError("unknown bundled case '" + name + "'");
}

}  // namespace satopf
