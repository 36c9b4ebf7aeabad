// eltest_cli -- command-line front end for the builtin normal mean/variance
// model: estimation, divergence tests, power approximations, Monte Carlo
// experiments, and influence diagnostics.  Tabular outputs are CSV, single
// results are JSON, and every command writes a run manifest.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eltest/asymptotics.hpp"
#include "eltest/estimators.hpp"
#include "eltest/model.hpp"
#include "eltest/montecarlo.hpp"
#include "eltest/testing.hpp"

using json = nlohmann::json;
using namespace eltest;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitInfeasible = 4;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Write content to path via a temporary file and rename, so partial outputs
// are never visible.
void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open output file: " + tmp);
        out << content;
        if (!out) throw ConfigError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw ConfigError("cannot rename output into place: " + path);
    }
}

// Single-column numeric CSV, optional header line "x".
Sample read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path);
    std::vector<double> values;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        // strip whitespace and a possible trailing CR
        std::size_t b = line.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r\n");
        std::string token = line.substr(b, e - b + 1);
        if (first && (token == "x" || token == "\"x\"")) {
            first = false;
            continue;
        }
        first = false;
        try {
            std::size_t pos = 0;
            const double v = std::stod(token, &pos);
            if (pos != token.size()) {
                throw ConfigError("trailing characters in data value: " +
                                  token);
            }
            values.push_back(v);
        } catch (const std::invalid_argument&) {
            throw ConfigError("non-numeric data value: " + token);
        } catch (const std::out_of_range&) {
            throw ConfigError("data value out of range: " + token);
        }
    }
    if (values.empty()) throw ConfigError("data file is empty: " + path);
    Sample s;
    s.data.resize(static_cast<int>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.data(static_cast<int>(i), 0) = values[i];
    }
    return s;
}

std::string dirname_of(const std::string& path) {
    const std::size_t pos = path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

void write_manifest(const std::string& command, const json& config,
                    std::uint64_t seed,
                    const std::vector<std::string>& paths,
                    double wall_seconds, const std::string& manifest_path) {
    json m;
    m["command"] = command;
    m["config"] = config;
    m["version"] = kVersion;
    m["master_seed"] = seed;
    m["outputs"] = paths;
    m["wall_clock_seconds"] = wall_seconds;
    atomic_write(manifest_path, m.dump(2) + "\n");
}

VectorXd scalar(double v) {
    VectorXd out(1);
    out[0] = v;
    return out;
}

// "a:b:step" or a comma-separated list of values.
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    auto parse_one = [](const std::string& s) {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("malformed grid value: " + s);
        return v;
    };
    try {
        if (spec.find(':') != std::string::npos) {
            std::vector<std::string> parts;
            std::stringstream ss(spec);
            std::string tok;
            while (std::getline(ss, tok, ':')) parts.push_back(tok);
            if (parts.size() != 3) {
                throw ConfigError("grid spec must be start:stop:step");
            }
            const double start = parse_one(parts[0]);
            const double stop = parse_one(parts[1]);
            const double step = parse_one(parts[2]);
            if (step <= 0.0 || stop < start) {
                throw ConfigError("grid spec must have step > 0, stop >= "
                                  "start");
            }
            for (double v = start; v <= stop + 1e-12; v += step) {
                grid.push_back(v);
            }
        } else {
            std::stringstream ss(spec);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (!tok.empty()) grid.push_back(parse_one(tok));
            }
        }
    } catch (const std::logic_error&) {
        throw ConfigError("malformed grid spec: " + spec);
    }
    if (grid.empty()) throw ConfigError("empty grid spec: " + spec);
    return grid;
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie strictly inside (0, 1)");
    }
}

// ---------------------------------------------------------------------------

int cmd_estimate(const std::string& data_path, const std::string& model_name,
                 double delta, const std::string& method_name, double init,
                 bool have_init, const std::string& out_path) {
    const auto start = std::chrono::steady_clock::now();
    if (model_name != "mean-variance-normal") {
        throw ConfigError("unknown model: " + model_name);
    }
    Sample sample = read_data_csv(data_path);
    MomentModel model = mean_variance_normal_model(delta);
    EstMethod method = est_method_from_string(method_name);
    VectorXd init_v = scalar(have_init ? init : sample.data.col(0).mean());

    EstimatorResult est = estimate(method, model, sample, init_v);

    json out;
    out["method"] = to_string(method);
    out["theta_hat"] = est.theta_hat[0];
    out["t"] = std::vector<double>(est.tilt.t.data(),
                                   est.tilt.t.data() + est.tilt.t.size());
    out["objective"] = est.objective;
    out["converged"] = est.converged;
    out["iterations"] = est.outer_iterations;
    atomic_write(out_path, out.dump(2) + "\n");

    json config = {{"data", data_path}, {"model", model_name},
                   {"delta", delta},    {"method", method_name},
                   {"out", out_path}};
    if (have_init) config["init"] = init;
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_manifest("estimate", config, 0, {out_path}, wall,
                   dirname_of(out_path) + "/manifest.json");
    return kExitOk;
}

int cmd_test(const std::string& data_path, double delta, double theta0,
             const std::string& family_name, double lambda,
             const std::string& estimator_name, double alpha,
             const std::string& out_path) {
    const auto start = std::chrono::steady_clock::now();
    require_alpha(alpha);
    Sample sample = read_data_csv(data_path);
    MomentModel model = mean_variance_normal_model(delta);
    TestFamily family = test_family_from_string(family_name);
    if (family == TestFamily::T_h || family == TestFamily::S_h) {
        throw ConfigError("transformed families are not exposed on the "
                          "command line");
    }
    EstMethod method = est_method_from_string(estimator_name);
    PhiFunction f = power_divergence_phi(lambda);

    TestResult res =
        run_simple_test(family, model, sample, scalar(theta0), f, nullptr,
                        method, scalar(sample.data.col(0).mean()), alpha);

    json out;
    out["family"] = to_string(family);
    out["estimator"] = to_string(method);
    out["lambda"] = lambda;
    out["statistic"] = res.statistic;
    out["df"] = res.df;
    out["p_value"] = res.p_value;
    out["critical_value"] = res.critical_value;
    out["alpha"] = res.alpha;
    out["reject"] = res.reject;
    atomic_write(out_path, out.dump(2) + "\n");

    json config = {{"data", data_path},     {"delta", delta},
                   {"theta0", theta0},      {"family", family_name},
                   {"lambda", lambda},      {"estimator", estimator_name},
                   {"alpha", alpha},        {"out", out_path}};
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_manifest("test", config, 0, {out_path}, wall,
                   dirname_of(out_path) + "/manifest.json");
    return kExitOk;
}

int cmd_power(double theta0, const std::string& grid_spec, double lambda,
              int n, double alpha, bool closed_form, std::uint64_t seed,
              const std::string& out_path) {
    const auto start = std::chrono::steady_clock::now();
    require_alpha(alpha);
    if (n <= 1) throw ConfigError("n must exceed 1");
    if (theta0 != 0.0 && closed_form) {
        throw ConfigError("the closed form is available only at theta0 = 0");
    }
    std::vector<double> grid = parse_grid(grid_spec);
    PhiFunction f = power_divergence_phi(lambda);
    MomentModel model = mean_variance_normal_model(1.0);

    std::string csv = "theta_star,mu,nu,beta_star,method\n";
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const double theta_star = grid[gi];
        if (closed_form) {
            ClosedFormPower cf =
                builtin_power_closed_form_t(lambda, theta_star, n, alpha);
            csv += fmt17(theta_star) + "," + fmt17(cf.mu) + "," +
                   fmt17(cf.nu) + "," + fmt17(cf.beta_star) + ",closed_form\n";
        } else {
            ExperimentConfig cfg;
            cfg.theta_true = theta_star;
            cfg.theta0 = theta0;
            cfg.n = 20000;
            cfg.master_seed = seed;
            Sample eval = draw_sample(cfg, gi);
            FixedAltApprox approx =
                power_approx_t(model, eval, scalar(theta0),
                               scalar(theta_star), f, n, alpha);
            csv += fmt17(theta_star) + "," + fmt17(approx.mu) + "," +
                   fmt17(approx.nu) + "," + fmt17(approx.beta_star) +
                   ",plugin\n";
        }
    }
    atomic_write(out_path, csv);

    json config = {{"theta0", theta0},   {"theta_star", grid_spec},
                   {"lambda", lambda},   {"n", n},
                   {"alpha", alpha},     {"closed_form", closed_form},
                   {"seed", seed},       {"out", out_path}};
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_manifest("power", config, seed, {out_path}, wall,
                   dirname_of(out_path) + "/manifest.json");
    return kExitOk;
}

ExperimentConfig parse_experiment_config(const json& j) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "delta") cfg.delta = value.get<double>();
        else if (key == "theta_true") cfg.theta_true = value.get<double>();
        else if (key == "theta0") cfg.theta0 = value.get<double>();
        else if (key == "n") cfg.n = value.get<int>();
        else if (key == "R") cfg.R = value.get<int>();
        else if (key == "lambdas") {
            cfg.lambdas = value.get<std::vector<double>>();
        } else if (key == "estimators") {
            cfg.estimators.clear();
            for (const auto& name : value) {
                cfg.estimators.push_back(
                    est_method_from_string(name.get<std::string>()));
            }
        } else if (key == "families") {
            cfg.families.clear();
            for (const auto& name : value) {
                cfg.families.push_back(
                    test_family_from_string(name.get<std::string>()));
            }
        } else if (key == "alpha") cfg.alpha = value.get<double>();
        else if (key == "master_seed") {
            cfg.master_seed = value.get<std::uint64_t>();
        } else if (key == "cdf_grid") {
            cfg.cdf_grid = value.get<std::vector<double>>();
        } else if (key == "threads") cfg.threads = value.get<int>();
        else throw ConfigError("unknown config key: " + key);
    }
    if (cfg.n <= 1 || cfg.R <= 0) {
        throw ConfigError("config requires n > 1 and R > 0");
    }
    require_alpha(cfg.alpha);
    if (cfg.delta <= 0.0) throw ConfigError("config requires delta > 0");
    if (cfg.estimators.empty() || cfg.families.empty()) {
        throw ConfigError("config requires estimators and families");
    }
    return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 int threads_override) {
    const auto start = std::chrono::steady_clock::now();
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") +
                          e.what());
    }
    ExperimentConfig cfg = parse_experiment_config(j);
    if (threads_override > 0) cfg.threads = threads_override;

    SummaryTable table = run_experiment(cfg);

    std::string sizes = "family,lambda,estimator,size,failures\n";
    for (const auto& [key, size] : table.size) {
        sizes += to_string(key.family) + "," + fmt17(key.lambda) + "," +
                 to_string(key.estimator) + "," + fmt17(size) + "," +
                 std::to_string(table.failures.at(key)) + "\n";
    }
    const std::string sizes_path = out_dir + "/sizes.csv";
    atomic_write(sizes_path, sizes);

    std::string cdf = "grid";
    for (const auto& [key, values] : table.statistic_cdf) {
        cdf += "," + key.label();
    }
    cdf += "\n";
    for (std::size_t i = 0; i < cfg.cdf_grid.size(); ++i) {
        cdf += fmt17(cfg.cdf_grid[i]);
        for (const auto& [key, values] : table.statistic_cdf) {
            cdf += "," + fmt17(values[i]);
        }
        cdf += "\n";
    }
    const std::string cdf_path = out_dir + "/cdf.csv";
    atomic_write(cdf_path, cdf);

    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_manifest("simulate", j, cfg.master_seed, {sizes_path, cdf_path},
                   wall, out_dir + "/manifest.json");
    return kExitOk;
}

int cmd_influence(const std::string& data_path, double delta, double theta0,
                  double x, const std::string& out_path) {
    const auto start = std::chrono::steady_clock::now();
    Sample sample = read_data_csv(data_path);
    MomentModel model = mean_variance_normal_model(delta);
    VectorXd theta = scalar(theta0);
    VectorXd xv = scalar(x);

    MomentMatrix mm = evaluate_moments(model, sample, theta);
    TiltSolution et = solve_et_multiplier(mm);
    TiltSolution el = solve_el_multiplier(mm);
    const double dn = static_cast<double>(mm.n());
    // mean of exp(t'g_i) over the sample, for the centered ETEL kernel.
    double mean_exp = 0.0;
    for (int i = 0; i < mm.n(); ++i) {
        mean_exp += std::exp(et.t.dot(mm.values.row(i).transpose()));
    }
    mean_exp /= dn;

    VectorXd g = model.g(xv, theta);
    json out;
    out["theta0"] = theta0;
    out["x"] = x;
    const double denom = 1.0 + el.t.dot(g);
    if (std::abs(denom) < 1e-6) {
        out["warning"] =
            "evaluation point lies near a pole of the EL kernel";
    }
    VectorXd rho_el =
        influence_rho(EstMethod::EL, model, xv, theta, el.t, mean_exp);
    VectorXd rho_et =
        influence_rho(EstMethod::ET, model, xv, theta, et.t, mean_exp);
    VectorXd rho_etel =
        influence_rho(EstMethod::ETEL, model, xv, theta, et.t, mean_exp);
    out["rho_el"] = std::vector<double>(rho_el.data(),
                                        rho_el.data() + rho_el.size());
    out["rho_et"] = std::vector<double>(rho_et.data(),
                                        rho_et.data() + rho_et.size());
    out["rho_etel"] = std::vector<double>(
        rho_etel.data(), rho_etel.data() + rho_etel.size());

    SandwichBlocks blocks = sandwich_blocks(model, sample, theta);
    out["if2"] = if2_s(blocks, g);
    atomic_write(out_path, out.dump(2) + "\n");

    json config = {{"data", data_path}, {"delta", delta},
                   {"theta0", theta0},  {"x", x},
                   {"out", out_path}};
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    write_manifest("influence", config, 0, {out_path}, wall,
                   dirname_of(out_path) + "/manifest.json");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Estimation and divergence testing in moment-condition "
                 "models (builtin normal mean/variance model)"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "Fit the parameter on a data "
                                               "file");
    std::string est_data, est_model = "mean-variance-normal",
                est_method = "etel", est_out = "result.json";
    double est_delta = 1.0, est_init = 0.0;
    est->add_option("--data", est_data)->required();
    est->add_option("--model", est_model);
    est->add_option("--delta", est_delta);
    est->add_option("--method", est_method);
    auto* est_init_opt = est->add_option("--init", est_init);
    est->add_option("--out", est_out);

    // test
    auto* tst = app.add_subcommand("test", "Test a simple null hypothesis");
    std::string tst_data, tst_family = "t", tst_estimator = "etel",
                tst_out = "result.json";
    double tst_delta = 1.0, tst_theta0 = 0.0, tst_lambda = 0.0,
           tst_alpha = 0.05;
    tst->add_option("--data", tst_data)->required();
    tst->add_option("--delta", tst_delta);
    tst->add_option("--theta0", tst_theta0)->required();
    tst->add_option("--family", tst_family);
    tst->add_option("--lambda", tst_lambda);
    tst->add_option("--estimator", tst_estimator);
    tst->add_option("--alpha", tst_alpha);
    tst->add_option("--out", tst_out);

    // power
    auto* pwr = app.add_subcommand("power", "Asymptotic power approximation "
                                            "over a grid of alternatives");
    std::string pwr_grid, pwr_out = "power.csv";
    double pwr_theta0 = 0.0, pwr_lambda = 0.0, pwr_alpha = 0.05;
    int pwr_n = 100;
    bool pwr_closed = false;
    std::uint64_t pwr_seed = 20240915;
    pwr->add_option("--theta0", pwr_theta0);
    pwr->add_option("--theta-star", pwr_grid)->required();
    pwr->add_option("--lambda", pwr_lambda);
    pwr->add_option("--n", pwr_n);
    pwr->add_option("--alpha", pwr_alpha);
    pwr->add_flag("--closed-form", pwr_closed);
    pwr->add_option("--seed", pwr_seed);
    pwr->add_option("--out", pwr_out);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo size experiment");
    std::string sim_config, sim_out_dir = ".";
    int sim_threads = 0;
    sim->add_option("--config", sim_config)->required();
    sim->add_option("--out-dir", sim_out_dir);
    sim->add_option("--threads", sim_threads);

    // influence
    auto* inf = app.add_subcommand("influence", "Influence diagnostics at an "
                                                "evaluation point");
    std::string inf_data, inf_out = "result.json";
    double inf_delta = 1.0, inf_theta0 = 0.0, inf_x = 0.0;
    inf->add_option("--data", inf_data)->required();
    inf->add_option("--delta", inf_delta);
    inf->add_option("--theta0", inf_theta0)->required();
    inf->add_option("--x", inf_x)->required();
    inf->add_option("--out", inf_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (est->parsed()) {
            return cmd_estimate(est_data, est_model, est_delta, est_method,
                                est_init, est_init_opt->count() > 0, est_out);
        }
        if (tst->parsed()) {
            return cmd_test(tst_data, tst_delta, tst_theta0, tst_family,
                            tst_lambda, tst_estimator, tst_alpha, tst_out);
        }
        if (pwr->parsed()) {
            return cmd_power(pwr_theta0, pwr_grid, pwr_lambda, pwr_n,
                             pwr_alpha, pwr_closed, pwr_seed, pwr_out);
        }
        if (sim->parsed()) {
            return cmd_simulate(sim_config, sim_out_dir, sim_threads);
        }
        if (inf->parsed()) {
            return cmd_influence(inf_data, inf_delta, inf_theta0, inf_x,
                                 inf_out);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const NullInfeasible& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInfeasible;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitUsage;
}
