#include "mmv/config.hpp"

#include <fstream>
#include <set>

#include "mmv/errors.hpp"

namespace mmv {

using nlohmann::json;

namespace {

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw ConfigParseError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!ok.count(item.key()))
            throw ConfigParseError("unknown key '" + item.key() + "' in " + where);
}

double get_number(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key))
        throw ConfigParseError(where + " is missing '" + std::string(key) + "'");
    if (!obj[key].is_number())
        throw ConfigParseError(where + "." + key + " must be a number");
    return obj[key].get<double>();
}

double get_number_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<double>();
}

Eigen::VectorXd parse_vector(const json& arr, const std::string& where) {
    if (!arr.is_array())
        throw ConfigParseError(where + " must be an array of numbers");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number())
            throw ConfigParseError(where + " must contain only numbers");
        v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd parse_matrix(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty())
        throw ConfigParseError(where + " must be a nonempty array of rows");
    const std::size_t cols = arr[0].is_array() ? arr[0].size() : 0;
    if (cols == 0) throw ConfigParseError(where + " rows must be nonempty arrays");
    Eigen::MatrixXd m(arr.size(), cols);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_array() || arr[i].size() != cols)
            throw ConfigParseError(where + " rows must all have the same length");
        for (std::size_t j = 0; j < cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                arr[i][j].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

ConstraintSet parse_constraint(const json& j) {
    expect_keys(j, "constraint", {"kind", "free_mask", "generators", "lower", "upper"});
    if (!j.contains("kind") || !j["kind"].is_string())
        throw ConfigParseError("constraint.kind must be a string");
    const std::string kind = j["kind"].get<std::string>();

    auto reject_except = [&j](std::initializer_list<const char*> wanted) {
        std::set<std::string> ok(wanted.begin(), wanted.end());
        ok.insert("kind");
        for (const auto& item : j.items())
            if (!ok.count(item.key()))
                throw ConfigParseError("constraint key '" + item.key() +
                                       "' does not apply to kind '" +
                                       j["kind"].get<std::string>() + "'");
    };

    if (kind == "full") {
        reject_except({});
        return ConstraintSet::full();
    }
    if (kind == "orthant") {
        reject_except({});
        return ConstraintSet::orthant();
    }
    if (kind == "subspace") {
        reject_except({"free_mask"});
        if (!j.contains("free_mask") || !j["free_mask"].is_array())
            throw ConfigParseError("subspace constraint needs a free_mask array");
        std::vector<bool> mask;
        for (const auto& b : j["free_mask"]) {
            if (!b.is_boolean())
                throw ConfigParseError("free_mask must contain booleans");
            mask.push_back(b.get<bool>());
        }
        return ConstraintSet::subspace(std::move(mask));
    }
    if (kind == "generators") {
        reject_except({"generators"});
        if (!j.contains("generators"))
            throw ConfigParseError("generators constraint needs a generators array");
        // rows of the JSON array are the generator vectors (length n each)
        const Eigen::MatrixXd rows = parse_matrix(j["generators"], "constraint.generators");
        return ConstraintSet::generated(rows.transpose());
    }
    if (kind == "box") {
        reject_except({"lower", "upper"});
        if (!j.contains("lower") || !j.contains("upper"))
            throw ConfigParseError("box constraint needs lower and upper arrays");
        return ConstraintSet::box_set(parse_vector(j["lower"], "constraint.lower"),
                                      parse_vector(j["upper"], "constraint.upper"));
    }
    throw ConfigParseError("unknown constraint kind '" + kind + "'");
}

json constraint_to_json(const ConstraintSet& c) {
    json j;
    switch (c.kind) {
        case ConstraintKind::full_space:
            j["kind"] = "full";
            break;
        case ConstraintKind::nonnegative_orthant:
            j["kind"] = "orthant";
            break;
        case ConstraintKind::coordinate_subspace: {
            j["kind"] = "subspace";
            json mask = json::array();
            for (bool b : c.free_mask) mask.push_back(b);
            j["free_mask"] = mask;
            break;
        }
        case ConstraintKind::finitely_generated_cone:
            j["kind"] = "generators";
            j["generators"] = matrix_to_json(c.generators.transpose());
            break;
        case ConstraintKind::box:
            j["kind"] = "box";
            j["lower"] = vector_to_json(c.lower);
            j["upper"] = vector_to_json(c.upper);
            break;
    }
    return j;
}

SimConfig parse_sim(const json& j) {
    expect_keys(j, "simulation",
                {"n_paths", "n_steps", "seed", "scheme", "antithetic", "threads"});
    SimConfig cfg = default_sim_config();
    if (j.contains("n_paths")) cfg.n_paths = j["n_paths"].get<std::int64_t>();
    if (j.contains("n_steps")) cfg.n_steps = j["n_steps"].get<std::int64_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("antithetic")) cfg.antithetic = j["antithetic"].get<bool>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("scheme")) {
        const std::string s = j["scheme"].get<std::string>();
        if (s == "euler")
            cfg.scheme = Scheme::euler;
        else if (s == "exact_relation")
            cfg.scheme = Scheme::exact_relation;
        else
            throw ConfigParseError("scheme must be 'euler' or 'exact_relation'");
    }
    return cfg;
}

SaddleCheckConfig parse_saddle(const json& j) {
    expect_keys(j, "verification",
                {"n_state_samples", "n_control_samples", "eta_radius", "tolerance", "seed"});
    SaddleCheckConfig cfg;
    if (j.contains("n_state_samples")) cfg.n_state_samples = j["n_state_samples"].get<int>();
    if (j.contains("n_control_samples"))
        cfg.n_control_samples = j["n_control_samples"].get<int>();
    cfg.eta_radius = get_number_or(j, "eta_radius", cfg.eta_radius);
    cfg.tolerance = get_number_or(j, "tolerance", cfg.tolerance);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

}  // namespace

SimConfig default_sim_config() {
    SimConfig cfg;
    cfg.n_paths = 4096;
    cfg.n_steps = 256;
    cfg.seed = 42;
    cfg.threads = 0;
    return cfg;
}

RunConfig parse_run_config(const json& j) {
    try {
        expect_keys(j, "config root",
                    {"market", "preference", "constraint", "simulation", "verification"});
        for (const char* required : {"market", "preference", "constraint"})
            if (!j.contains(required))
                throw ConfigParseError(std::string("config is missing the '") + required +
                                       "' block");

        RunConfig cfg;
        const json& m = j["market"];
        expect_keys(m, "market", {"r", "mu", "sigma", "horizon_T"});
        cfg.market.r = get_number(m, "market", "r");
        if (!m.contains("mu") || !m.contains("sigma"))
            throw ConfigParseError("market needs mu and sigma");
        cfg.market.mu = parse_vector(m["mu"], "market.mu");
        cfg.market.sigma = parse_matrix(m["sigma"], "market.sigma");
        cfg.market.horizon_T = get_number(m, "market", "horizon_T");

        const json& p = j["preference"];
        expect_keys(p, "preference", {"theta", "x0"});
        cfg.pref.theta = get_number(p, "preference", "theta");
        cfg.pref.x0 = get_number(p, "preference", "x0");

        cfg.constraint = parse_constraint(j["constraint"]);
        if (j.contains("simulation")) cfg.sim = parse_sim(j["simulation"]);
        if (j.contains("verification")) cfg.saddle = parse_saddle(j["verification"]);
        return cfg;
    } catch (const ConfigParseError&) {
        throw;
    } catch (const json::exception& e) {
        throw ConfigParseError(e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigParseError("invalid JSON in '" + path + "': " + e.what());
    }
    return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
    json j;
    j["market"] = {{"r", cfg.market.r},
                   {"mu", vector_to_json(cfg.market.mu)},
                   {"sigma", matrix_to_json(cfg.market.sigma)},
                   {"horizon_T", cfg.market.horizon_T}};
    j["preference"] = {{"theta", cfg.pref.theta}, {"x0", cfg.pref.x0}};
    j["constraint"] = constraint_to_json(cfg.constraint);
    if (cfg.sim) {
        j["simulation"] = {
            {"n_paths", cfg.sim->n_paths},
            {"n_steps", cfg.sim->n_steps},
            {"seed", cfg.sim->seed},
            {"scheme", cfg.sim->scheme == Scheme::euler ? "euler" : "exact_relation"},
            {"antithetic", cfg.sim->antithetic},
            {"threads", cfg.sim->threads}};
    }
    if (cfg.saddle) {
        j["verification"] = {{"n_state_samples", cfg.saddle->n_state_samples},
                             {"n_control_samples", cfg.saddle->n_control_samples},
                             {"eta_radius", cfg.saddle->eta_radius},
                             {"tolerance", cfg.saddle->tolerance},
                             {"seed", cfg.saddle->seed}};
    }
    return j;
}

json solution_to_json(const ClosedFormSolution& sol) {
    const ThresholdProcess chi = threshold_process(sol);
    json j;
    j["xi"] = vector_to_json(sol.xi);
    j["xi_c"] = vector_to_json(sol.xi_c);
    j["direction"] = vector_to_json(sol.direction);
    j["eta_star"] = vector_to_json(sol.eta_star);
    j["f0"] = sol.f0();
    j["f_rate"] = sol.f_rate;
    j["f_tilde_rate"] = sol.f_tilde_rate;
    j["psi_tilde"] = sol.psi_tilde;
    j["beta_star"] = sol.beta_star;
    j["chi_c_0"] = chi.value(0.0);
    j["chi_c_T"] = chi.bliss();
    j["xi_dot_xi_c"] = sol.xi_dot_xic;
    j["xi_c_squared"] = sol.xic_squared;
    j["conic"] = sol.conic;
    return j;
}

json report_to_json(const VerificationReport& report) {
    json j;
    j["suite"] = report.suite;
    j["pass"] = report.pass;
    j["worst_residual"] = report.worst_residual;
    j["worst_location"] = report.worst_location;
    j["notes"] = report.notes;
    return j;
}

}  // namespace mmv
