#include "sparsehw/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sparsehw {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDefaultSeed = 20210917ULL;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw config_error("config: key '" + key + "': " + what);
}

int line_of_byte(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

void check_known_keys(const json& obj, const std::string& scope,
                      const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            fail(scope.empty() ? key : scope + "." + key, "unknown key");
    }
}

double get_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(key, "must be a number, got " + obj[key].dump());
    return obj[key].get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& key, std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail(key, "must be an integer, got " + obj[key].dump());
    return obj[key].get<std::int64_t>();
}

// Scalar broadcast or explicit array of the stated length.
Eigen::VectorXd get_vector(const json& obj, const std::string& key, Eigen::Index len,
                           double fallback) {
    if (!obj.contains(key)) return Eigen::VectorXd::Constant(len, fallback);
    const json& v = obj[key];
    if (v.is_number()) return Eigen::VectorXd::Constant(len, v.get<double>());
    if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != len)
            fail(key, "array length " + std::to_string(v.size()) + " must equal " +
                          std::to_string(len));
        Eigen::VectorXd out(len);
        for (Eigen::Index i = 0; i < len; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number())
                fail(key, "array entries must be numbers");
            out[i] = v[static_cast<std::size_t>(i)].get<double>();
        }
        return out;
    }
    fail(key, "must be a number or an array");
}

Eigen::MatrixXd get_square_matrix(const json& obj, const std::string& key, Eigen::Index dim) {
    if (!obj.contains(key)) return Eigen::MatrixXd::Identity(dim, dim);
    const json& v = obj[key];
    if (v.is_string()) {
        if (v.get<std::string>() == "identity") return Eigen::MatrixXd::Identity(dim, dim);
        fail(key, "string form must be \"identity\"");
    }
    if (v.is_number()) return v.get<double>() * Eigen::MatrixXd::Identity(dim, dim);
    if (v.is_object() && v.contains("diag")) {
        const Eigen::VectorXd d = get_vector(v, "diag", dim, 1.0);
        return d.asDiagonal();
    }
    if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != dim)
            fail(key, "matrix must have " + std::to_string(dim) + " rows");
        Eigen::MatrixXd out(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const json& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
                fail(key, "row " + std::to_string(i) + " must have " + std::to_string(dim) +
                              " entries");
            for (Eigen::Index j = 0; j < dim; ++j)
                out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
        return out;
    }
    fail(key, "must be \"identity\", a number, {\"diag\": [...]}, or a full matrix");
}

Eigen::MatrixXd get_cross_matrix(const json& obj, const std::string& key, Eigen::Index rows,
                                 Eigen::Index cols) {
    if (!obj.contains(key)) return Eigen::MatrixXd::Zero(rows, cols);
    const json& v = obj[key];
    if (v.is_number()) return Eigen::MatrixXd::Constant(rows, cols, v.get<double>());
    if (v.is_object() && v.contains("entries")) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
        for (const json& triple : v["entries"]) {
            if (!triple.is_array() || triple.size() != 3)
                fail(key + ".entries", "each entry must be [k, l, value]");
            const auto k = triple[0].get<Eigen::Index>();
            const auto l = triple[1].get<Eigen::Index>();
            if (k < 0 || k >= rows || l < 0 || l >= cols)
                fail(key + ".entries", "index (" + std::to_string(k) + "," +
                                           std::to_string(l) + ") out of range");
            out(k, l) = triple[2].get<double>();
        }
        return out;
    }
    if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != rows)
            fail(key, "matrix must have " + std::to_string(rows) + " rows");
        Eigen::MatrixXd out(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            const json& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
                fail(key, "row " + std::to_string(i) + " must have " + std::to_string(cols) +
                              " entries");
            for (Eigen::Index j = 0; j < cols; ++j)
                out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
        return out;
    }
    fail(key, "must be a number, {\"entries\": [[k,l,value],...]}, or a full matrix");
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

Constants parse_constants(const json& root, const std::filesystem::path& base_dir) {
    Constants out;
    if (!root.contains("constants")) return out;
    json obj = root["constants"];
    if (obj.is_string()) {
        // Path to a constants file written by the calibrate command.
        std::filesystem::path path = obj.get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        std::ifstream in(path);
        if (!in) fail("constants", "cannot open constants file " + path.string());
        try {
            obj = json::parse(in);
        } catch (const json::parse_error& e) {
            fail("constants", "constants file " + path.string() + ": " + e.what());
        }
    }
    if (!obj.is_object()) fail("constants", "must be an object or a file path");
    check_known_keys(obj, "constants", {"c", "d", "C", "d_cond", "calibrated"});
    out.c = get_number(obj, "c", out.c);
    out.d = get_number(obj, "d", 0.0);
    out.C = get_number(obj, "C", out.C);
    out.d_cond = get_number(obj, "d_cond", out.d_cond);
    if (obj.contains("calibrated")) {
        if (!obj["calibrated"].is_boolean()) fail("constants.calibrated", "must be a boolean");
        out.calibrated = obj["calibrated"].get<bool>();
    }
    if (out.c <= 0.0) fail("constants.c", "must be positive");
    if (out.d < 0.0) fail("constants.d", "must be nonnegative");
    if (out.C <= 0.0) fail("constants.C", "must be positive");
    if (out.d_cond <= 0.0) fail("constants.d_cond", "must be positive");
    return out;
}

}  // namespace

std::vector<double> TailGridSpec::build(double reference_scale) const {
    double lo = min > 0.0 ? min : 0.25 * reference_scale;
    double hi = max > 0.0 ? max : 6.0 * reference_scale;
    if (!(lo > 0.0) || !(hi > lo))
        throw config_error("config: key 't_grid': needs 0 < min < max (got min=" +
                           std::to_string(lo) + ", max=" + std::to_string(hi) + ")");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double w = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1.0);
        grid[static_cast<std::size_t>(i)] =
            log_scale ? lo * std::pow(hi / lo, w) : lo + (hi - lo) * w;
    }
    return grid;
}

double ExperimentConfig::default_d() const {
    const bool centered = scenario.population.muX.isZero(0.0) &&
                          scenario.population.muY.isZero(0.0);
    return centered ? 2.0 : 8.0;
}

std::string ExperimentConfig::resolved_json() const {
    json root;
    root["scenario"] = to_string(kind);
    root["n"] = n;
    root["p"] = p;
    root["q"] = q;
    root["alpha"] = alpha;
    root["reps"] = reps;
    root["seed"] = seed;
    root["workers"] = workers;
    root["entry"] = {entry_k, entry_l};
    root["out"] = out_dir;

    json pop;
    pop["generator"] =
        scenario.population.kind == PopulationKind::gaussian ? "gaussian" : "bounded-mixture";
    pop["mu_x"] = vector_to_json(scenario.population.muX);
    pop["mu_y"] = vector_to_json(scenario.population.muY);
    pop["sigma_xx"] = matrix_to_json(scenario.population.SigmaXX);
    pop["sigma_yy"] = matrix_to_json(scenario.population.SigmaYY);
    pop["sigma_xy"] = matrix_to_json(scenario.population.SigmaXY);
    pop["k_x"] = scenario.population.KX;
    pop["k_y"] = scenario.population.KY;
    root["population"] = pop;

    if (scenario.missing) {
        json mask;
        mask["pi_x"] = vector_to_json(scenario.missing->piX);
        mask["pi_y"] = vector_to_json(scenario.missing->piY);
        mask["pi_xy"] = matrix_to_json(scenario.missing->piXY);
        if (scenario.missing->coupling) mask["theta"] = scenario.missing->coupling->theta;
        root["mask"] = mask;
    }
    if (scenario.error) {
        json err;
        err["u_x"] = vector_to_json(scenario.error->uX);
        err["u_y"] = vector_to_json(scenario.error->uY);
        err["u_xy"] = matrix_to_json(scenario.error->uXY);
        err["b_x"] = vector_to_json(scenario.error->BX);
        err["b_y"] = vector_to_json(scenario.error->BY);
        err["rho"] = scenario.error->rho;
        err["dispersion"] = scenario.error->dispersion;
        root["error"] = err;
    }

    json grid;
    grid["min"] = t_grid.min;
    grid["max"] = t_grid.max;
    grid["count"] = t_grid.count;
    grid["scale"] = t_grid.log_scale ? "log" : "linear";
    root["t_grid"] = grid;

    json consts;
    consts["c"] = constants.c;
    consts["d"] = constants.d > 0.0 ? constants.d : default_d();
    consts["C"] = constants.C;
    consts["d_cond"] = constants.d_cond;
    consts["calibrated"] = constants.calibrated;
    root["constants"] = consts;

    return root.dump(2) + "\n";
}

std::string ExperimentConfig::content_hash() const {
    const std::string text = resolved_json();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentConfig parse_config(const std::filesystem::path& path, const CliOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), overrides, path.string());
}

ExperimentConfig parse_config_text(const std::string& text, const CliOverrides& overrides,
                                   const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error("config: " + origin + " line " +
                           std::to_string(line_of_byte(text, e.byte)) + ": " + e.what());
    }
    if (!root.is_object()) throw config_error("config: " + origin + ": top level must be an object");

    check_known_keys(root, "",
                     {"scenario", "n", "p", "q", "alpha", "reps", "seed", "workers", "entry",
                      "population", "mask", "error", "t_grid", "constants", "out"});

    ExperimentConfig cfg;

    const std::string kind_str =
        root.contains("scenario") ? root["scenario"].get<std::string>() : "complete";
    if (kind_str == "complete")
        cfg.kind = ScenarioKind::complete;
    else if (kind_str == "missing")
        cfg.kind = ScenarioKind::missing;
    else if (kind_str == "bounded-error")
        cfg.kind = ScenarioKind::bounded_error;
    else
        fail("scenario", "must be one of complete|missing|bounded-error, got \"" + kind_str +
                             "\"");

    cfg.n = get_integer(root, "n", 0);
    cfg.p = get_integer(root, "p", 0);
    cfg.q = get_integer(root, "q", 0);
    if (cfg.n < 2) fail("n", "must be an integer >= 2, got " + std::to_string(cfg.n));
    if (cfg.p < 1) fail("p", "must be an integer >= 1, got " + std::to_string(cfg.p));
    if (cfg.q < 1) fail("q", "must be an integer >= 1, got " + std::to_string(cfg.q));

    cfg.alpha = get_number(root, "alpha", 0.05);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        fail("alpha", "must lie in (0,1), got " + std::to_string(cfg.alpha));

    cfg.reps = get_integer(root, "reps", 10000);
    if (cfg.reps < 100) fail("reps", "must be >= 100, got " + std::to_string(cfg.reps));

    // Seed priority: flag > config > SPARSEHW_SEED env > default.
    if (overrides.seed) {
        cfg.seed = *overrides.seed;
    } else if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            fail("seed", "must be a nonnegative integer");
        cfg.seed = root["seed"].get<std::uint64_t>();
    } else if (const char* env = std::getenv("SPARSEHW_SEED")) {
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw config_error("config: SPARSEHW_SEED is not an unsigned integer: " +
                               std::string(env));
        cfg.seed = parsed;
    } else {
        cfg.seed = kDefaultSeed;
    }

    cfg.workers = static_cast<int>(get_integer(root, "workers", 1));
    if (cfg.workers < 1) fail("workers", "must be >= 1");
    if (overrides.workers) cfg.workers = *overrides.workers;
    if (overrides.reps) cfg.reps = *overrides.reps;

    if (root.contains("entry")) {
        const json& e = root["entry"];
        if (!e.is_array() || e.size() != 2) fail("entry", "must be [k, l]");
        cfg.entry_k = e[0].get<Eigen::Index>();
        cfg.entry_l = e[1].get<Eigen::Index>();
        if (cfg.entry_k < 0 || cfg.entry_k >= cfg.p)
            fail("entry", "k=" + std::to_string(cfg.entry_k) + " out of [0," +
                              std::to_string(cfg.p - 1) + "]");
        if (cfg.entry_l < 0 || cfg.entry_l >= cfg.q)
            fail("entry", "l=" + std::to_string(cfg.entry_l) + " out of [0," +
                              std::to_string(cfg.q - 1) + "]");
    }

    cfg.out_dir = root.contains("out") ? root["out"].get<std::string>() : cfg.out_dir;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;

    // Population.
    json pop = root.contains("population") ? root["population"] : json::object();
    if (!pop.is_object()) fail("population", "must be an object");
    check_known_keys(pop, "population",
                     {"generator", "mu_x", "mu_y", "sigma_xx", "sigma_yy", "sigma_xy", "k_x",
                      "k_y"});
    const std::string generator =
        pop.contains("generator") ? pop["generator"].get<std::string>() : "gaussian";
    Eigen::VectorXd muX = get_vector(pop, "mu_x", cfg.p, 0.0);
    Eigen::VectorXd muY = get_vector(pop, "mu_y", cfg.q, 0.0);
    Eigen::MatrixXd sxx = get_square_matrix(pop, "sigma_xx", cfg.p);
    Eigen::MatrixXd syy = get_square_matrix(pop, "sigma_yy", cfg.q);
    Eigen::MatrixXd sxy = get_cross_matrix(pop, "sigma_xy", cfg.p, cfg.q);
    const double kx = get_number(pop, "k_x", 0.0);
    const double ky = get_number(pop, "k_y", 0.0);
    try {
        if (generator == "gaussian") {
            cfg.scenario.population = PopulationSpec::gaussian(
                std::move(muX), std::move(muY), std::move(sxx), std::move(syy), std::move(sxy),
                kx, ky);
        } else if (generator == "bounded-mixture") {
            cfg.scenario.population = PopulationSpec::bounded_mixture(
                std::move(muX), std::move(muY), std::move(sxx), std::move(syy), std::move(sxy));
        } else {
            fail("population.generator", "must be gaussian|bounded-mixture");
        }
    } catch (const config_error&) {
        throw;
    } catch (const error& e) {
        fail("population", e.what());
    }

    // Mask.
    if (cfg.kind == ScenarioKind::missing && !root.contains("mask"))
        fail("mask", "required for scenario \"missing\"");
    if (root.contains("mask")) {
        const json& mask = root["mask"];
        check_known_keys(mask, "mask", {"pi_x", "pi_y", "coupling", "theta", "pi_xy"});
        Eigen::VectorXd piX = get_vector(mask, "pi_x", cfg.p, 1.0);
        Eigen::VectorXd piY = get_vector(mask, "pi_y", cfg.q, 1.0);
        const int sources = (mask.contains("coupling") ? 1 : 0) +
                            (mask.contains("theta") ? 1 : 0) + (mask.contains("pi_xy") ? 1 : 0);
        if (sources > 1) fail("mask", "give exactly one of coupling, theta, pi_xy");
        try {
            if (mask.contains("pi_xy")) {
                Eigen::MatrixXd table = get_cross_matrix(mask, "pi_xy", cfg.p, cfg.q);
                cfg.scenario.missing =
                    MissingSpec::from_table(std::move(piX), std::move(piY), std::move(table));
            } else if (mask.contains("theta")) {
                cfg.scenario.missing = MissingSpec::with_coupling(
                    std::move(piX), std::move(piY), MaskCoupling{mask["theta"].get<double>()});
            } else {
                const std::string coupling = mask.contains("coupling")
                                                 ? mask["coupling"].get<std::string>()
                                                 : "independent";
                MaskCoupling mc;
                if (coupling == "independent")
                    mc = MaskCoupling::independent();
                else if (coupling == "comonotone")
                    mc = MaskCoupling::comonotone();
                else if (coupling == "exclusive")
                    mc = MaskCoupling::exclusive();
                else
                    fail("mask.coupling", "must be independent|comonotone|exclusive");
                cfg.scenario.missing =
                    MissingSpec::with_coupling(std::move(piX), std::move(piY), mc);
            }
        } catch (const config_error&) {
            throw;
        } catch (const error& e) {
            fail("mask", e.what());
        }
    }

    // Errors.
    if (cfg.kind == ScenarioKind::bounded_error && !root.contains("error"))
        fail("error", "required for scenario \"bounded-error\"");
    if (root.contains("error")) {
        const json& err = root["error"];
        check_known_keys(err, "error", {"u_x", "u_y", "b_x", "b_y", "rho", "dispersion"});
        Eigen::VectorXd uX = get_vector(err, "u_x", cfg.p, 1.0);
        Eigen::VectorXd uY = get_vector(err, "u_y", cfg.q, 1.0);
        Eigen::VectorXd bX = get_vector(err, "b_x", cfg.p, 1.0);
        Eigen::VectorXd bY = get_vector(err, "b_y", cfg.q, 1.0);
        const double rho = get_number(err, "rho", 0.0);
        const double dispersion = get_number(err, "dispersion", 10.0);
        try {
            cfg.scenario.error = MeasurementErrorSpec::beta_copula(
                std::move(uX), std::move(uY), std::move(bX), std::move(bY), rho, dispersion);
        } catch (const config_error&) {
            throw;
        } catch (const error& e) {
            fail("error", e.what());
        }
    }

    // Grid.
    if (root.contains("t_grid")) {
        const json& grid = root["t_grid"];
        check_known_keys(grid, "t_grid", {"min", "max", "count", "scale"});
        cfg.t_grid.min = get_number(grid, "min", 0.0);
        cfg.t_grid.max = get_number(grid, "max", 0.0);
        cfg.t_grid.count = static_cast<int>(get_integer(grid, "count", 40));
        if (cfg.t_grid.count < 2) fail("t_grid.count", "must be >= 2");
        if (grid.contains("scale")) {
            const std::string scale = grid["scale"].get<std::string>();
            if (scale == "log")
                cfg.t_grid.log_scale = true;
            else if (scale == "linear")
                cfg.t_grid.log_scale = false;
            else
                fail("t_grid.scale", "must be log|linear");
        }
    }

    cfg.constants = parse_constants(root, std::filesystem::path(origin).parent_path());

    cfg.scenario.kind = cfg.kind;
    cfg.scenario.n = cfg.n;
    try {
        cfg.scenario.validate();
    } catch (const error& e) {
        throw config_error("config: " + std::string(e.what()));
    }
    return cfg;
}

}  // namespace sparsehw
