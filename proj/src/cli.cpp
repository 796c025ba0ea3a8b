#include "mmv/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmv/config.hpp"
#include "mmv/errors.hpp"

namespace mmv {

namespace {

using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::string format = "json";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool out_is_prefix = false) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", flags.out,
                    out_is_prefix ? "output path prefix" : "output file (default: stdout)");
    cmd->add_option("--format", flags.format, "output format")->check(CLI::IsMember({"json"}));
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw ConfigParseError("cannot open output file '" + out_path + "'");
    os << text << "\n";
}

struct StrategySpec {
    std::string name = "mmv";

    Strategy build(const ClosedFormSolution& sol) const {
        if (name == "mmv") return mmv_feedback(sol);
        if (name == "mv") return mv_feedback(sol);
        if (name == "zero") return zero_feedback(static_cast<int>(sol.direction.size()));
        if (name.rfind("scaled:", 0) == 0) {
            const std::string eps_text = name.substr(7);
            try {
                return scaled_feedback(sol, std::stod(eps_text));
            } catch (const std::invalid_argument&) {
                throw ConfigParseError("bad scaled strategy '" + name + "'");
            }
        }
        throw ConfigParseError("unknown strategy '" + name +
                               "' (expected mmv|mv|zero|scaled:<eps>)");
    }
};

struct SimFlags {
    std::optional<std::int64_t> paths, steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scheme;
    std::optional<int> threads;
    bool antithetic = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--paths", paths, "number of Monte Carlo paths");
        cmd->add_option("--steps", steps, "number of time steps");
        cmd->add_option("--seed", seed, "RNG seed (all randomness flows from it)");
        cmd->add_option("--scheme", scheme, "euler | exact_relation")
            ->check(CLI::IsMember({"euler", "exact_relation"}));
        cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
        cmd->add_flag("--antithetic", antithetic, "antithetic path pairing");
    }

    SimConfig merge(const RunConfig& cfg) const {
        SimConfig sim = cfg.sim ? *cfg.sim : default_sim_config();
        if (paths) sim.n_paths = *paths;
        if (steps) sim.n_steps = *steps;
        if (seed) sim.seed = *seed;
        if (threads) sim.threads = *threads;
        if (antithetic) sim.antithetic = true;
        if (scheme) sim.scheme = *scheme == "euler" ? Scheme::euler : Scheme::exact_relation;
        return sim;
    }
};

json summary_json(const ClosedFormSolution& sol, const PathBundle& paths,
                  const SimConfig& sim, const std::string& strategy_name) {
    const auto last = paths.wealth.cols() - 1;
    const Eigen::VectorXd terminal_wealth = paths.wealth.col(last);
    const Eigen::VectorXd terminal_density = paths.density.col(last);
    const Eigen::VectorXd residual_max = paths.relation_residual.rowwise().maxCoeff();
    const MonotoneReport mono = monotone_region_check(sol, terminal_wealth, terminal_density);
    const MomentSummary mw = moments(terminal_wealth);
    const MomentSummary md = moments(terminal_density);

    json j;
    j["n_paths"] = sim.n_paths;
    j["n_steps"] = sim.n_steps;
    j["seed"] = sim.seed;
    j["scheme"] = sim.scheme == Scheme::euler ? "euler" : "exact_relation";
    j["strategy"] = strategy_name;
    j["terminal_wealth"] = {{"mean", mw.mean}, {"variance", mw.variance},
                            {"min", mw.min}, {"max", mw.max}};
    j["terminal_density"] = {{"mean", md.mean}, {"variance", md.variance},
                             {"min", md.min}, {"max", md.max}};
    j["relation_residual"] = {{"median", quantile(residual_max, 0.5)},
                              {"q90", quantile(residual_max, 0.9)},
                              {"max", residual_max.maxCoeff()}};
    j["strong_gap_rms"] = strong_gap_rms(sol, paths);
    j["monotone_region"] = {{"fraction_beyond", mono.fraction_beyond},
                            {"median_identity", mono.median_identity},
                            {"max_identity", mono.max_identity}};
    return j;
}

int cmd_solve(const CommonFlags& flags) {
    const RunConfig cfg = load_run_config(flags.config_path);
    const Market market = Market::validate(cfg.market);
    const ClosedFormSolution sol = solve(market, cfg.pref, cfg.constraint);
    emit(solution_to_json(sol).dump(2), flags.out);
    return 0;
}

int cmd_project(const CommonFlags& flags, const std::string& vector_text) {
    const RunConfig cfg = load_run_config(flags.config_path);
    const Market market = Market::validate(cfg.market);
    const ProjectedCone cone = to_projected_cone(cfg.constraint, market);

    Eigen::VectorXd v = market.price_of_risk();
    if (!vector_text.empty()) {
        json arr;
        try {
            arr = json::parse(vector_text);
        } catch (const json::exception& e) {
            throw ConfigParseError(std::string("bad --vector: ") + e.what());
        }
        if (!arr.is_array()) throw ConfigParseError("--vector must be a JSON array");
        v.resize(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }

    const ProjectionDetail detail = project_detail(v, cone);
    json j;
    j["input"] = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j["input"].push_back(v[i]);
    j["projection"] = json::array();
    for (Eigen::Index i = 0; i < detail.point.size(); ++i)
        j["projection"].push_back(detail.point[i]);
    if (detail.coeffs.size() > 0) {
        j["coefficients"] = json::array();
        for (Eigen::Index i = 0; i < detail.coeffs.size(); ++i)
            j["coefficients"].push_back(detail.coeffs[i]);
    }
    j["orthogonality_residual"] = orthogonality_residual(v, detail.point);
    j["iterations"] = detail.iterations;
    emit(j.dump(2), flags.out);
    return 0;
}

int cmd_simulate(const CommonFlags& flags, const SimFlags& sim_flags,
                 const StrategySpec& strategy_spec) {
    const RunConfig cfg = load_run_config(flags.config_path);
    const Market market = Market::validate(cfg.market);
    const ClosedFormSolution sol = solve(market, cfg.pref, cfg.constraint);
    const SimConfig sim = sim_flags.merge(cfg);
    const PathBundle paths = simulate_paths(sol, sim, strategy_spec.build(sol));

    const std::string prefix = flags.out.empty() ? "mmv_run" : flags.out;
    {
        std::ofstream csv(prefix + "_paths.csv", std::ios::binary);
        if (!csv) throw ConfigParseError("cannot open '" + prefix + "_paths.csv'");
        write_paths_csv(csv, paths);
    }
    {
        std::ofstream js(prefix + "_summary.json", std::ios::binary);
        if (!js) throw ConfigParseError("cannot open '" + prefix + "_summary.json'");
        js << summary_json(sol, paths, sim, strategy_spec.name).dump(2) << "\n";
    }
    std::cout << prefix + "_paths.csv\n" << prefix + "_summary.json\n";
    return 0;
}

int cmd_verify(const CommonFlags& flags, const SimFlags& sim_flags, std::string suite) {
    const RunConfig cfg = load_run_config(flags.config_path);
    const Market market = Market::validate(cfg.market);
    const SimConfig sim = sim_flags.merge(cfg);
    const SaddleCheckConfig saddle = cfg.saddle ? *cfg.saddle : SaddleCheckConfig{};

    std::vector<std::string> selected;
    if (suite == "all")
        selected = suite_names();
    else
        selected.push_back(suite);

    json reports = json::array();
    bool all_pass = true;
    for (const std::string& name : selected) {
        const VerificationReport report =
            run_suite(name, market, cfg.pref, cfg.constraint, sim, saddle);
        all_pass = all_pass && report.pass;
        reports.push_back(report_to_json(report));
        std::cout << (report.pass ? "[PASS] " : "[FAIL] ") << report.suite
                  << "  worst=" << report.worst_residual;
        if (!report.notes.empty()) std::cout << "  (" << report.notes << ")";
        std::cout << "\n";
    }
    if (!flags.out.empty()) emit(reports.dump(2), flags.out);
    return all_pass ? 0 : 1;
}

int cmd_evaluate(const CommonFlags& flags, const SimFlags& sim_flags,
                 const StrategySpec& strategy_spec) {
    const RunConfig cfg = load_run_config(flags.config_path);
    const Market market = Market::validate(cfg.market);
    const ClosedFormSolution sol = solve(market, cfg.pref, cfg.constraint);
    const SimConfig sim = sim_flags.merge(cfg);
    const TerminalSamples terminal = simulate_terminal(sol, sim, strategy_spec.build(sol));

    const double target = value_function(sol, 0.0, sol.x0, 1.0);
    const Estimate mv = estimate_mv_objective(terminal.wealth, sol.theta);
    const Estimate mmv = estimate_mmv_objective(terminal.wealth, terminal.density, sol.theta);

    auto block = [target](const Estimate& est) {
        json j;
        j["value"] = est.value;
        j["stderr"] = est.std_error;
        j["z"] = est.std_error > 0.0 ? (est.value - target) / est.std_error : 0.0;
        return j;
    };
    json j;
    j["strategy"] = strategy_spec.name;
    j["n_paths"] = sim.n_paths;
    j["target"] = target;
    j["mv"] = block(mv);
    j["mmv"] = block(mmv);
    emit(j.dump(2), flags.out);
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Cone-constrained monotone mean-variance portfolio toolkit"};
    app.require_subcommand(1);

    CommonFlags solve_flags, project_flags, sim_flags_common, verify_flags, eval_flags;
    SimFlags sim_flags, verify_sim_flags, eval_sim_flags;
    StrategySpec sim_strategy, eval_strategy;
    std::string project_vector;
    std::string verify_suite = "all";

    CLI::App* solve_cmd = app.add_subcommand("solve", "closed-form solution as JSON");
    add_common(solve_cmd, solve_flags);

    CLI::App* project_cmd =
        app.add_subcommand("project", "project a vector onto the constraint image");
    add_common(project_cmd, project_flags);
    project_cmd->add_option("--vector", project_vector,
                            "JSON array to project (default: xi)");

    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "simulate paths, write CSV + summary JSON");
    add_common(simulate_cmd, sim_flags_common, /*out_is_prefix=*/true);
    sim_flags.add_to(simulate_cmd);
    simulate_cmd->add_option("--strategy", sim_strategy.name, "mmv|mv|zero|scaled:<eps>");

    CLI::App* verify_cmd = app.add_subcommand("verify", "run verification suites");
    add_common(verify_cmd, verify_flags);
    verify_sim_flags.add_to(verify_cmd);
    verify_cmd->add_option("--suite", verify_suite,
                           "orthogonality|saddle|relation|monotone|equivalence|beta|all");

    CLI::App* evaluate_cmd =
        app.add_subcommand("evaluate", "Monte Carlo objective estimates vs closed form");
    add_common(evaluate_cmd, eval_flags);
    eval_sim_flags.add_to(evaluate_cmd);
    evaluate_cmd->add_option("--strategy", eval_strategy.name, "mmv|mv|zero|scaled:<eps>");

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("mmv");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(solve_flags);
        if (project_cmd->parsed()) return cmd_project(project_flags, project_vector);
        if (simulate_cmd->parsed())
            return cmd_simulate(sim_flags_common, sim_flags, sim_strategy);
        if (verify_cmd->parsed())
            return cmd_verify(verify_flags, verify_sim_flags, verify_suite);
        if (evaluate_cmd->parsed())
            return cmd_evaluate(eval_flags, eval_sim_flags, eval_strategy);
        std::cerr << "no subcommand given\n";
        return 2;
    } catch (const ConfigParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.name() << ": " << e.what() << "\n";
        return 3;
    }
}

}  // namespace mmv
