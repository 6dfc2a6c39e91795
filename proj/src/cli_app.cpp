#include "satopf/cli_app.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "satopf/case_io.hpp"
#include "satopf/evaluation.hpp"
#include "satopf/util.hpp"

namespace satopf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << "0x" << std::hex << v;
    return ss.str();
}

json to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
    return v;
}

json to_json(const CostConfig& c) {
    return json{{"c_res", c.c_res},
                {"c_wind", c.c_wind},
                {"gamma_res", c.gamma_res},
                {"gamma_line", c.gamma_line},
                {"gamma_gen", c.gamma_gen},
                {"delta_line", c.delta_line},
                {"tau_sat_factor", c.tau_sat_factor},
                {"tau_pos", c.tau_pos},
                {"epsilon_gen", c.epsilon_gen}};
}

void merge(const json& j, CostConfig& c) {
    c.c_res = j.value("c_res", c.c_res);
    c.c_wind = j.value("c_wind", c.c_wind);
    c.gamma_res = j.value("gamma_res", c.gamma_res);
    c.gamma_line = j.value("gamma_line", c.gamma_line);
    c.gamma_gen = j.value("gamma_gen", c.gamma_gen);
    c.delta_line = j.value("delta_line", c.delta_line);
    c.tau_sat_factor = j.value("tau_sat_factor", c.tau_sat_factor);
    c.tau_pos = j.value("tau_pos", c.tau_pos);
    c.epsilon_gen = j.value("epsilon_gen", c.epsilon_gen);
}

std::string step_rule_name(StepRule r) {
    switch (r) {
        case StepRule::adagrad_coordinate: return "adagrad";
        case StepRule::adagrad_norm: return "adagrad_norm";
        case StepRule::fixed: return "fixed";
    }
    return "adagrad";
}

StepRule step_rule_from(const std::string& s) {
    if (s == "adagrad") return StepRule::adagrad_coordinate;
    if (s == "adagrad_norm") return StepRule::adagrad_norm;
    if (s == "fixed") return StepRule::fixed;
    throw ParseError("unknown step rule '" + s + "' (adagrad | adagrad_norm | fixed)");
}

json to_json(const PsgConfig& c) {
    return json{{"max_iters", c.max_iters},
                {"batch_size", c.batch_size},
                {"base_step", c.base_step},
                {"adagrad_epsilon", c.adagrad_epsilon},
                {"step_rule", step_rule_name(c.step_rule)},
                {"eval_sample_size", c.eval_sample_size},
                {"eval_every", c.eval_every},
                {"patience", c.patience},
                {"seed", c.seed},
                {"max_infeasible_fraction", c.max_infeasible_fraction}};
}

void merge(const json& j, PsgConfig& c) {
    c.max_iters = j.value("max_iters", c.max_iters);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.base_step = j.value("base_step", c.base_step);
    c.adagrad_epsilon = j.value("adagrad_epsilon", c.adagrad_epsilon);
    if (j.contains("step_rule")) c.step_rule = step_rule_from(j["step_rule"]);
    c.eval_sample_size = j.value("eval_sample_size", c.eval_sample_size);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.max_infeasible_fraction = j.value("max_infeasible_fraction", c.max_infeasible_fraction);
}

json to_json(const SaaConfig& c) {
    return json{{"max_iters", c.max_iters},
                {"base_step", c.base_step},
                {"adagrad_epsilon", c.adagrad_epsilon},
                {"step_rule", step_rule_name(c.step_rule)},
                {"pg_tol", c.pg_tol},
                {"pg_check_every", c.pg_check_every}};
}

void merge(const json& j, SaaConfig& c) {
    c.max_iters = j.value("max_iters", c.max_iters);
    c.base_step = j.value("base_step", c.base_step);
    c.adagrad_epsilon = j.value("adagrad_epsilon", c.adagrad_epsilon);
    if (j.contains("step_rule")) c.step_rule = step_rule_from(j["step_rule"]);
    c.pg_tol = j.value("pg_tol", c.pg_tol);
    c.pg_check_every = j.value("pg_check_every", c.pg_check_every);
}

json to_json(const EvalOptions& c) {
    return json{{"sample_size", c.sample_size},
                {"seed", c.seed},
                {"include_affine_metrics", c.include_affine_metrics},
                {"line_violation_factor", c.line_violation_factor},
                {"max_infeasible_fraction", c.max_infeasible_fraction}};
}

void merge(const json& j, EvalOptions& c) {
    c.sample_size = j.value("sample_size", c.sample_size);
    c.seed = j.value("seed", c.seed);
    c.include_affine_metrics = j.value("include_affine_metrics", c.include_affine_metrics);
    c.line_violation_factor = j.value("line_violation_factor", c.line_violation_factor);
    c.max_infeasible_fraction = j.value("max_infeasible_fraction", c.max_infeasible_fraction);
}

json to_json(const StudySpec& s) {
    return json{{"models", s.models},
                {"sa_gamma_line", s.sa_gamma_line},
                {"gp_cap_gamma_line", s.gp_cap_gamma_line},
                {"gamma_gen_grid", s.gamma_gen_grid},
                {"eps_gen_grid", s.eps_gen_grid},
                {"replicates", s.replicates},
                {"saa_scenarios", s.saa_scenarios},
                {"gp_init_gamma_gen", s.gp_init_gamma_gen},
                {"base_seed", s.base_seed},
                {"costs", to_json(s.costs)},
                {"psg", to_json(s.psg)},
                {"saa", to_json(s.saa)},
                {"eval", to_json(s.eval)}};
}

void merge(const json& j, StudySpec& s) {
    s.models = j.value("models", s.models);
    s.sa_gamma_line = j.value("sa_gamma_line", s.sa_gamma_line);
    s.gp_cap_gamma_line = j.value("gp_cap_gamma_line", s.gp_cap_gamma_line);
    s.gamma_gen_grid = j.value("gamma_gen_grid", s.gamma_gen_grid);
    s.eps_gen_grid = j.value("eps_gen_grid", s.eps_gen_grid);
    s.replicates = j.value("replicates", s.replicates);
    s.saa_scenarios = j.value("saa_scenarios", s.saa_scenarios);
    s.gp_init_gamma_gen = j.value("gp_init_gamma_gen", s.gp_init_gamma_gen);
    s.base_seed = j.value("base_seed", s.base_seed);
    if (j.contains("costs")) merge(j["costs"], s.costs);
    if (j.contains("psg")) merge(j["psg"], s.psg);
    if (j.contains("saa")) merge(j["saa"], s.saa);
    if (j.contains("eval")) merge(j["eval"], s.eval);
}

json to_json(const EvaluationReport& r) {
    json j{{"expected_total_cost", r.expected_total_cost},
           {"first_stage_gen_cost", r.first_stage_gen_cost},
           {"first_stage_reserve_cost", r.first_stage_reserve_cost},
           {"expected_penalty_cost", r.expected_penalty_cost},
           {"joint_line_violation_prob", r.joint_line_violation_prob},
           {"sample_size", r.sample_size},
           {"seed", r.seed},
           {"infeasible_count", r.infeasible_count},
           {"scenario_hash", hex64(r.scenario_hash)}};
    if (r.affine_gen_violation_prob >= 0.0)
        j["affine_gen_violation_prob"] = r.affine_gen_violation_prob;
    if (r.wind_utilization_pct >= 0.0) j["wind_utilization_pct"] = r.wind_utilization_pct;
    return j;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open JSON file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON in '") + path + "': " + e.what());
    }
    return j;
}

void write_file(const fs::path& path, const std::string& contents) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << contents;
}

struct OutputSet {
    fs::path dir;
    json outputs = json::object();

    void write(const std::string& name, const std::string& contents) {
        write_file(dir / name, contents);
        outputs[name] = hex64(fnv1a(contents));
    }
};

void write_manifest(OutputSet& out, const std::vector<std::string>& args, const json& config,
                    std::uint64_t case_hash_value) {
    json m{{"schema", "satopf-manifest-1"},
           {"tool_version", "0.1.0"},
           {"command", args},
           {"case_hash", hex64(case_hash_value)},
           {"config", config},
           {"outputs", out.outputs}};
    write_file(out.dir / "manifest.json", m.dump(2) + "\n");
}

std::string csv_escape(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::string fmt_double_csv(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* kSweepHeader =
    "model,gamma_line,gamma_gen,eps_gen,replicate,solve_seed,solved,"
    "expected_total_cost,first_stage_gen_cost,first_stage_reserve_cost,"
    "expected_penalty_cost,joint_line_violation_prob,affine_gen_violation_prob,"
    "wind_utilization_pct,sample_size,eval_seed,infeasible_count,scenario_hash,error";

std::string sweep_csv(const std::vector<SweepRecord>& records) {
    std::ostringstream out;
    out << kSweepHeader << "\n";
    for (const SweepRecord& r : records) {
        out << r.point.model << ',' << fmt_double_csv(r.point.gamma_line) << ','
            << fmt_double_csv(r.point.gamma_gen) << ',' << fmt_double_csv(r.point.eps_gen) << ','
            << r.point.replicate << ',' << r.point.solve_seed << ',' << (r.solved ? 1 : 0) << ','
            << fmt_double_csv(r.report.expected_total_cost) << ','
            << fmt_double_csv(r.report.first_stage_gen_cost) << ','
            << fmt_double_csv(r.report.first_stage_reserve_cost) << ','
            << fmt_double_csv(r.report.expected_penalty_cost) << ','
            << fmt_double_csv(r.report.joint_line_violation_prob) << ','
            << fmt_double_csv(r.report.affine_gen_violation_prob) << ','
            << fmt_double_csv(r.report.wind_utilization_pct) << ',' << r.report.sample_size << ','
            << r.report.seed << ',' << r.report.infeasible_count << ','
            << hex64(r.report.scenario_hash) << ',' << csv_escape(r.error) << "\n";
    }
    return out.str();
}

std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open records file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty records file");
    if (line != kSweepHeader)
        throw SchemaVersionMismatch("unexpected sweep CSV header in '" + path + "'");
    std::vector<SweepRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() < 18) throw ParseError("short sweep CSV row", line_no);
        SweepRecord r;
        r.point.model = f[0];
        r.point.gamma_line = std::stod(f[1]);
        r.point.gamma_gen = std::stod(f[2]);
        r.point.eps_gen = std::stod(f[3]);
        r.point.replicate = std::stoi(f[4]);
        r.point.solve_seed = std::stoull(f[5]);
        r.solved = f[6] == "1";
        r.report.expected_total_cost = std::stod(f[7]);
        r.report.first_stage_gen_cost = std::stod(f[8]);
        r.report.first_stage_reserve_cost = std::stod(f[9]);
        r.report.expected_penalty_cost = std::stod(f[10]);
        r.report.joint_line_violation_prob = std::stod(f[11]);
        r.report.affine_gen_violation_prob = std::stod(f[12]);
        r.report.wind_utilization_pct = std::stod(f[13]);
        r.report.sample_size = std::stol(f[14]);
        r.report.seed = std::stoull(f[15]);
        r.report.infeasible_count = std::stol(f[16]);
        r.report.scenario_hash = std::stoull(f[17], nullptr, 16);
        if (f.size() > 18) r.error = f[18];
        records.push_back(std::move(r));
    }
    return records;
}

json solution_json(const std::string& model, const CaseBundle& bundle, const FirstStage& x,
                   std::uint64_t seed, double objective, double std_error) {
    return json{{"schema", "satopf-solution-1"},
                {"case", bundle.name},
                {"case_hash", hex64(bundle.source_hash)},
                {"model", model},
                {"seed", seed},
                {"objective_estimate", objective},
                {"objective_std_error", std_error},
                {"p0", to_json(x.p0)},
                {"r_plus", to_json(x.r_plus)},
                {"r_minus", to_json(x.r_minus)},
                {"alpha", to_json(x.alpha)}};
}

FirstStage solution_from_json(const json& j) {
    if (j.value("schema", "") != "satopf-solution-1")
        throw SchemaVersionMismatch("expected a satopf-solution-1 file");
    FirstStage x;
    x.p0 = vector_from_json(j.at("p0"));
    x.r_plus = vector_from_json(j.at("r_plus"));
    x.r_minus = vector_from_json(j.at("r_minus"));
    x.alpha = vector_from_json(j.at("alpha"));
    return x;
}

struct CommonOpts {
    std::string case_path;
    std::string out_dir = "out";
    std::string config_path;
    std::uint64_t seed = 1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--case", o.case_path, "case file path or bundled:<name>")->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--config", o.config_path, "JSON config overrides");
    cmd->add_option("--seed", o.seed, "solver seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
}

void apply_threads(int threads) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    set_default_threads(std::max(1, threads));
}

int dispatch(const std::vector<std::string>& args);

int cmd_solve(const std::string& model, const CommonOpts& opts, double gamma_line,
              double gamma_gen, double eps_gen, const std::vector<std::string>& args) {
    apply_threads(opts.threads);
    const CaseBundle bundle = load_case(opts.case_path);
    const FeasibleSetSpec spec = make_feasible_spec(bundle);

    CostConfig costs;
    PsgConfig psg;
    SaaConfig saa;
    json config = json::object();
    int saa_scenarios = 500;
    double gp_init_gamma_gen = 20.0;
    if (!opts.config_path.empty()) {
        config = load_json_file(opts.config_path);
        if (config.contains("costs")) merge(config["costs"], costs);
        if (config.contains("psg")) merge(config["psg"], psg);
        if (config.contains("saa")) merge(config["saa"], saa);
        saa_scenarios = config.value("saa_scenarios", saa_scenarios);
        gp_init_gamma_gen = config.value("gp_init_gamma_gen", gp_init_gamma_gen);
    }
    if (gamma_line > 0.0) costs.gamma_line = gamma_line;
    if (gamma_gen > 0.0) costs.gamma_gen = gamma_gen;
    if (eps_gen > 0.0) costs.epsilon_gen = eps_gen;

    OutputSet out{fs::path(opts.out_dir)};
    FirstStage x;
    double objective = 0.0, std_error = 0.0;

    if (model == "SA") {
        const SaaResult init = solve_gp(bundle.net, bundle.model, costs, spec, saa_scenarios,
                                        gp_init_gamma_gen, derive_seed(opts.seed, 0x4750u), saa);
        psg.seed = derive_seed(opts.seed, 0x5341u);
        const PsgResult res = solve_smooth(bundle.net, bundle.model, costs, spec, init.x, psg);
        x = res.best;
        objective = res.best_objective;
        std_error = res.best_std_error;
        std::ostringstream trace;
        trace << "iteration,objective,std_error\n";
        for (const IterateRecord& rec : res.trace)
            trace << rec.iteration << ',' << fmt_double_csv(rec.objective) << ','
                  << fmt_double_csv(rec.std_error) << "\n";
        out.write("trace.csv", trace.str());
    } else if (model == "GP") {
        const SaaResult res = solve_gp(bundle.net, bundle.model, costs, spec, saa_scenarios,
                                       costs.gamma_gen, opts.seed, saa);
        x = res.x;
        objective = res.objective;
    } else {
        const SaaResult res = solve_cap(bundle.net, bundle.model, costs, spec, saa_scenarios,
                                        costs.epsilon_gen, opts.seed, saa);
        x = res.x;
        objective = res.objective;
    }

    out.write("solution.json",
              solution_json(model, bundle, x, opts.seed, objective, std_error).dump(2) + "\n");
    json cfg{{"costs", to_json(costs)}, {"saa", to_json(saa)},
             {"saa_scenarios", saa_scenarios}};
    if (model == "SA") {
        cfg["psg"] = to_json(psg);
        cfg["gp_init_gamma_gen"] = gp_init_gamma_gen;
    }
    write_manifest(out, args, cfg, bundle.source_hash);
    std::cout << "wrote " << (out.dir / "solution.json").string() << " (objective "
              << objective << ")\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& solution_path, EvalOptions eval,
                 const std::vector<std::string>& args) {
    apply_threads(opts.threads);
    const CaseBundle bundle = load_case(opts.case_path);
    CostConfig costs;
    json config = json::object();
    if (!opts.config_path.empty()) {
        config = load_json_file(opts.config_path);
        if (config.contains("costs")) merge(config["costs"], costs);
        if (config.contains("eval")) merge(config["eval"], eval);
    }
    const FirstStage x = solution_from_json(load_json_file(solution_path));
    validate(x, make_feasible_spec(bundle), 1e-6);
    const EvaluationReport report =
        monte_carlo_evaluate(bundle.net, bundle.model, x, costs, eval);

    OutputSet out{fs::path(opts.out_dir)};
    out.write("evaluation.json", to_json(report).dump(2) + "\n");
    write_manifest(out, args, json{{"costs", to_json(costs)}, {"eval", to_json(eval)}},
                   bundle.source_hash);
    std::cout << "wrote " << (out.dir / "evaluation.json").string() << " (expected total cost "
              << report.expected_total_cost << ", line violation "
              << report.joint_line_violation_prob << ")\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& study_path,
              const std::vector<std::string>& args) {
    apply_threads(opts.threads);
    const CaseBundle bundle = load_case(opts.case_path);
    const FeasibleSetSpec spec = make_feasible_spec(bundle);
    StudySpec study;
    if (!study_path.empty()) merge(load_json_file(study_path), study);
    study.apply_default_grids();

    const std::vector<SweepRecord> records =
        pareto_sweep(bundle.net, bundle.model, spec, study);

    OutputSet out{fs::path(opts.out_dir)};
    out.write("sweep.csv", sweep_csv(records));
    json jrecords = json::array();
    for (const SweepRecord& r : records) {
        json jr{{"model", r.point.model},
                {"gamma_line", r.point.gamma_line},
                {"gamma_gen", r.point.gamma_gen},
                {"eps_gen", r.point.eps_gen},
                {"replicate", r.point.replicate},
                {"solve_seed", r.point.solve_seed},
                {"solved", r.solved}};
        if (r.solved)
            jr["report"] = to_json(r.report);
        else
            jr["error"] = r.error;
        jrecords.push_back(jr);
    }
    out.write("sweep.json", json{{"schema", "satopf-sweep-1"}, {"records", jrecords}}.dump(2) +
                                "\n");
    write_manifest(out, args, to_json(study), bundle.source_hash);
    std::cout << "wrote " << (out.dir / "sweep.csv").string() << " (" << records.size()
              << " records)\n";
    return 0;
}

int cmd_select(const std::string& records_path, double max_violation,
               const std::string& out_dir, const std::vector<std::string>& args) {
    const std::vector<SweepRecord> records = read_sweep_csv(records_path);
    const std::optional<SweepRecord> best = select_best(records, max_violation);
    json result;
    if (best) {
        result = json{{"model", best->point.model},
                      {"gamma_line", best->point.gamma_line},
                      {"gamma_gen", best->point.gamma_gen},
                      {"eps_gen", best->point.eps_gen},
                      {"replicate", best->point.replicate},
                      {"expected_total_cost", best->report.expected_total_cost},
                      {"joint_line_violation_prob", best->report.joint_line_violation_prob}};
    } else {
        result = json{{"selection", nullptr},
                      {"note", "no record satisfies the violation threshold"}};
    }
    std::cout << result.dump(2) << "\n";
    if (!out_dir.empty()) {
        OutputSet out{fs::path(out_dir)};
        out.write("selected.json", result.dump(2) + "\n");
        write_manifest(out, args, json{{"max_violation", max_violation}}, 0);
    }
    return 0;
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"stochastic DC optimal power flow with reserve saturation"};
    app.require_subcommand(1);

    CommonOpts sa_opts, gp_opts, cap_opts, eval_opts_c, sweep_opts;
    double sa_gamma_line = 0.0, gp_gamma_line = 0.0, cap_gamma_line = 0.0;
    double gp_gamma_gen = 0.0, cap_eps_gen = 0.0;

    CLI::App* sa = app.add_subcommand("solve-sa", "solve the smooth approximation with PSG");
    add_common(sa, sa_opts);
    sa->add_option("--gamma-line", sa_gamma_line, "line penalty coefficient");

    CLI::App* gp = app.add_subcommand("solve-gp", "solve the generator-penalty SAA");
    add_common(gp, gp_opts);
    gp->add_option("--gamma-line", gp_gamma_line, "line penalty coefficient");
    gp->add_option("--gamma-gen", gp_gamma_gen, "generator violation penalty");

    CLI::App* cap = app.add_subcommand("solve-cap", "solve the conservative affine policy SAA");
    add_common(cap, cap_opts);
    cap->add_option("--gamma-line", cap_gamma_line, "line penalty coefficient");
    cap->add_option("--eps-gen", cap_eps_gen, "generator chance-constraint violation level");

    std::string solution_path;
    EvalOptions eval;
    CLI::App* ev = app.add_subcommand("evaluate", "out-of-sample Monte Carlo evaluation");
    add_common(ev, eval_opts_c);
    ev->add_option("--solution", solution_path, "solution JSON file")->required();
    ev->add_option("--samples", eval.sample_size, "Monte Carlo sample size");
    ev->add_option("--eval-seed", eval.seed, "evaluation sample seed");
    ev->add_flag("--affine-metrics", eval.include_affine_metrics,
                 "also report the affine-policy generator violation probability");
    ev->add_option("--line-violation-factor", eval.line_violation_factor,
                   "count violations against factor * f_max");

    std::string study_path;
    CLI::App* sw = app.add_subcommand("sweep", "parameter sweep with replicates");
    add_common(sw, sweep_opts);
    sw->add_option("--study", study_path, "study JSON file");

    std::string records_path, select_out;
    double max_violation = 0.005;
    CLI::App* sel = app.add_subcommand("select", "pick the cheapest qualifying sweep record");
    sel->add_option("--records", records_path, "sweep.csv produced by `sweep`")->required();
    sel->add_option("--max-violation", max_violation, "line violation threshold");
    sel->add_option("--out", select_out, "optional output directory");

    std::string emit_name, emit_out;
    CLI::App* em = app.add_subcommand("emit-case", "write a bundled case in canonical form");
    em->add_option("--name", emit_name, "bundled case name")->required();
    em->add_option("--out", emit_out, "output path")->required();

    std::string manifest_path;
    CLI::App* rr = app.add_subcommand("rerun", "re-execute the command recorded in a manifest");
    rr->add_option("--manifest", manifest_path, "manifest.json from a previous run")->required();

    // CLI11 wants argv-style reversed input.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (sa->parsed()) return cmd_solve("SA", sa_opts, sa_gamma_line, 0.0, 0.0, args);
    if (gp->parsed()) return cmd_solve("GP", gp_opts, gp_gamma_line, gp_gamma_gen, 0.0, args);
    if (cap->parsed()) return cmd_solve("CAP", cap_opts, cap_gamma_line, 0.0, cap_eps_gen, args);
    if (ev->parsed()) return cmd_evaluate(eval_opts_c, solution_path, eval, args);
    if (sw->parsed()) return cmd_sweep(sweep_opts, study_path, args);
    if (sel->parsed()) return cmd_select(records_path, max_violation, select_out, args);
    if (em->parsed()) {
        write_file(emit_out, emit_case(bundled_case(emit_name)));
        std::cout << "wrote " << emit_out << "\n";
        return 0;
    }
    if (rr->parsed()) {
        const json m = load_json_file(manifest_path);
        if (m.value("schema", "") != "satopf-manifest-1")
            throw SchemaVersionMismatch("not a satopf manifest");
        return dispatch(m.at("command").get<std::vector<std::string>>());
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaVersionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ScenarioInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const InfeasibleFirstStage& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const EmptyFeasibleSet& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const ExcessiveInfeasibility& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const InfeasibleStart& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace satopf
