#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sinkmd/checks.hpp"
#include "sinkmd/io.hpp"
#include "sinkmd/random.hpp"
#include "sinkmd/sinkmd.hpp"

namespace sinkmd::cli {
namespace {

using nlohmann::json;

struct CommonOptions {
    std::optional<double> eta;
    double tol = 1e-8;
    std::size_t max_iter = 100000;
    std::uint64_t seed = 0;
    std::string log_path;
    std::string out_path;
    std::string summary_path;
};

void add_common(CLI::App& app, CommonOptions& o) {
    app.add_option("--eta", o.eta, "stepsize (default depends on the method)");
    app.add_option("--tol", o.tol, "stop when the l1 constraint violation is <= tol")
        ->capture_default_str();
    app.add_option("--max-iter", o.max_iter, "iteration cap")->capture_default_str();
    app.add_option("--seed", o.seed, "seed for uniform sampling")->capture_default_str();
    app.add_option("--log", o.log_path, "telemetry CSV output");
    app.add_option("--out", o.out_path, "solution CSV output");
    app.add_option("--summary", o.summary_path, "summary JSON output");
}

SolverConfig make_config(const CommonOptions& o) {
    SolverConfig cfg;
    cfg.eta = o.eta;
    cfg.tol = o.tol;
    cfg.max_iter = o.max_iter;
    cfg.seed = o.seed;
    cfg.validate();
    return cfg;
}

int exit_code(StopReason r) { return r == StopReason::converged ? kSuccess : kNotConverged; }

double final_violation(const std::vector<TraceEntry>& trace) {
    return trace.empty() ? 0.0 : trace.back().violation_l1;
}

void write_summary(const std::string& path, const json& summary) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << std::setprecision(17) << summary.dump(2) << '\n';
}

PositiveVector positive_from(std::vector<double> v, const std::string& what) {
    try {
        return PositiveVector(std::move(v));
    } catch (const DomainError& e) {
        throw DomainError(what + ": " + e.what());
    }
}

// --- solve -----------------------------------------------------------------

struct SolveOptions {
    std::string cost, p, q, method = "sinkhorn";
    double gamma = 0.0;
    bool round = false;
    CommonOptions common;
};

int cmd_solve(const SolveOptions& o, std::ostream& out) {
    const auto method = parse_method(o.method);
    if (!method) throw CLI::ValidationError("--method", "unknown method '" + o.method + "'");
    OTProblem problem(io::read_matrix(o.cost), o.gamma,
                      positive_from(io::read_vector(o.p), "--p"),
                      positive_from(io::read_vector(o.q), "--q"));
    SolverConfig cfg = make_config(o.common);
    cfg.method = *method;
    const auto report = solve(problem, cfg);

    Matrix plan = report.solution.plan;
    const double cost = transport_cost(problem, plan);
    json summary = {{"method", std::string(to_string(cfg.method))},
                    {"iterations", report.iterations},
                    {"stop_reason", std::string(to_string(report.stop_reason))},
                    {"final_violation", final_violation(report.trace)},
                    {"transport_cost", cost},
                    {"gamma", problem.gamma()}};
    if (o.round) {
        plan = round_to_feasible(problem, plan);
        summary["rounded"] = true;
        summary["rounded_transport_cost"] = transport_cost(problem, plan);
        summary["rounded_violation"] = marginal_violation(problem, plan);
    }
    if (!o.common.out_path.empty()) io::write_matrix(o.common.out_path, plan);
    if (!o.common.log_path.empty()) io::write_trace(o.common.log_path, report.trace);
    write_summary(o.common.summary_path, summary);

    out << to_string(cfg.method) << ": " << to_string(report.stop_reason) << " after "
        << report.iterations << " iterations, violation " << final_violation(report.trace)
        << ", transport cost " << std::setprecision(10) << cost << '\n';
    return exit_code(report.stop_reason);
}

// --- system ----------------------------------------------------------------

struct SystemOptions {
    std::string matrix, b, blocks, x0, sampling = "cyclic";
    CommonOptions common;
};

std::vector<std::vector<std::size_t>> read_blocks(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw io::ParseError(path + ": cannot open for reading");
    json j;
    try {
        in >> j;
        return j.get<std::vector<std::vector<std::size_t>>>();
    } catch (const json::exception& e) {
        throw io::ParseError(path + ": expected a JSON array of arrays of row indices (" +
                             e.what() + ")");
    }
}

int cmd_system(const SystemOptions& o, std::ostream& out) {
    const auto sampling = parse_sampling(o.sampling);
    if (!sampling) throw CLI::ValidationError("--sampling", "unknown sampling '" + o.sampling + "'");
    const auto b = io::read_vector(o.b);
    auto blocks = read_blocks(o.blocks);
    std::optional<ConstraintSystem> system;
    if (io::is_triplet_file(o.matrix)) {
        const auto triplets = io::read_triplets(o.matrix);
        system.emplace(ConstraintSystem::from_triplets(triplets, b, 0, std::move(blocks)));
    } else {
        system.emplace(ConstraintSystem::from_dense(io::read_matrix(o.matrix), b, std::move(blocks)));
    }
    const PositiveVector x0 = o.x0.empty()
                                  ? PositiveVector(std::vector<double>(system->dimension(), 1.0))
                                  : positive_from(io::read_vector(o.x0), "--x0");
    SolverConfig cfg = make_config(o.common);
    cfg.method = Method::smd;
    cfg.sampling = *sampling;
    const auto report = solve_smd(*system, x0, cfg);

    if (!o.common.out_path.empty()) io::write_vector(o.common.out_path, report.solution);
    if (!o.common.log_path.empty()) io::write_trace(o.common.log_path, report.trace);
    write_summary(o.common.summary_path,
                  {{"method", "smd"},
                   {"sampling", std::string(to_string(cfg.sampling))},
                   {"iterations", report.iterations},
                   {"stop_reason", std::string(to_string(report.stop_reason))},
                   {"final_violation", final_violation(report.trace)},
                   {"objective", report.trace.empty() ? 0.0 : report.trace.back().objective}});
    out << "smd/" << to_string(cfg.sampling) << ": " << to_string(report.stop_reason) << " after "
        << report.iterations << " iterations, violation " << final_violation(report.trace)
        << '\n';
    return exit_code(report.stop_reason);
}

// --- bench -----------------------------------------------------------------

struct BenchOptions {
    std::size_t n = 10;
    std::size_t count = 5;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    std::string methods = "sinkhorn,greenkhorn,pinkhorn,acc_pinkhorn";
    std::string out_path;
    double tol = 1e-8;
    std::size_t max_iter = 100000;
};

int cmd_bench(const BenchOptions& o, std::ostream& out) {
    std::vector<Method> methods;
    std::stringstream list(o.methods);
    for (std::string name; std::getline(list, name, ',');) {
        const auto m = parse_method(name);
        if (!m) throw CLI::ValidationError("--methods", "unknown method '" + name + "'");
        methods.push_back(*m);
    }
    if (methods.empty()) throw CLI::ValidationError("--methods", "no methods given");

    std::ofstream file;
    if (!o.out_path.empty()) {
        file.open(o.out_path);
        if (!file) throw std::runtime_error(o.out_path + ": cannot open for writing");
    }
    std::ostream& csv = o.out_path.empty() ? out : file;
    csv << "instance,method,iterations,final_violation,time_ms\n";

    random::Engine rng(o.seed);
    for (std::size_t k = 0; k < o.count; ++k) {
        const OTProblem problem = random::ot_problem(rng, o.n, o.gamma);
        for (Method m : methods) {
            SolverConfig cfg;
            cfg.method = m;
            cfg.tol = o.tol;
            cfg.max_iter = o.max_iter;
            cfg.seed = o.seed;
            const auto report = solve(problem, cfg);
            csv << k << ',' << to_string(m) << ',' << report.iterations << ','
                << io::format_double(final_violation(report.trace)) << ','
                << io::format_double(report.trace.empty() ? 0.0 : report.trace.back().time_ms)
                << '\n';
        }
    }
    return kSuccess;
}

// --- check -----------------------------------------------------------------

struct CheckCliOptions {
    std::uint64_t seed = 1;
    double tolerance_scale = 1.0;
};

int cmd_check(const CheckCliOptions& o, std::ostream& out) {
    const auto results = checks::run_invariant_suite({o.seed, o.tolerance_scale});
    bool all = true;
    for (const auto& r : results) {
        all = all && r.passed;
        out << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(50) << r.name
            << " worst " << std::scientific << std::setprecision(3) << r.worst << " tol "
            << r.tolerance << std::defaultfloat << '\n';
    }
    out << (all ? "all checks passed" : "some checks FAILED") << '\n';
    return all ? kSuccess : kNotConverged;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sinkhorn-family solvers built on stochastic mirror descent", "sinkmd"};
    app.require_subcommand(1);

    SolveOptions solve_opts;
    auto* solve_cmd = app.add_subcommand("solve", "solve an entropic optimal transport problem");
    solve_cmd->add_option("--cost", solve_opts.cost, "cost matrix CSV")
        ->required()
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--p", solve_opts.p, "row marginal CSV")
        ->required()
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--q", solve_opts.q, "column marginal CSV")
        ->required()
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--gamma", solve_opts.gamma, "entropic regularization")->required();
    solve_cmd->add_option("--method", solve_opts.method,
                          "sinkhorn|greenkhorn|pinkhorn|acc_pinkhorn|smd")
        ->capture_default_str();
    solve_cmd->add_flag("--round", solve_opts.round, "round the plan onto the marginals");
    add_common(*solve_cmd, solve_opts.common);

    SystemOptions system_opts;
    auto* system_cmd = app.add_subcommand("system", "solve Ax = b, x > 0, by mirror descent");
    system_cmd->add_option("--matrix", system_opts.matrix, "dense CSV or row,col,value triplets")
        ->required()
        ->check(CLI::ExistingFile);
    system_cmd->add_option("--b", system_opts.b, "right-hand side CSV")
        ->required()
        ->check(CLI::ExistingFile);
    system_cmd->add_option("--blocks", system_opts.blocks, "JSON array of row-index blocks")
        ->check(CLI::ExistingFile);
    system_cmd->add_option("--x0", system_opts.x0, "starting point CSV (default all ones)")
        ->check(CLI::ExistingFile);
    system_cmd->add_option("--sampling", system_opts.sampling, "cyclic|uniform|greedy")
        ->capture_default_str();
    add_common(*system_cmd, system_opts.common);

    BenchOptions bench_opts;
    auto* bench_cmd = app.add_subcommand("bench", "compare solvers on seeded random instances");
    bench_cmd->add_option("--n", bench_opts.n, "problem size")->capture_default_str();
    bench_cmd->add_option("--count", bench_opts.count, "number of instances")
        ->capture_default_str();
    bench_cmd->add_option("--gamma", bench_opts.gamma)->capture_default_str();
    bench_cmd->add_option("--seed", bench_opts.seed)->capture_default_str();
    bench_cmd->add_option("--methods", bench_opts.methods, "comma-separated method list")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench_opts.out_path, "CSV output (default stdout)");
    bench_cmd->add_option("--tol", bench_opts.tol)->capture_default_str();
    bench_cmd->add_option("--max-iter", bench_opts.max_iter)->capture_default_str();

    CheckCliOptions check_opts;
    auto* check_cmd = app.add_subcommand("check", "run the oracle-backed invariant suite");
    check_cmd->add_option("--seed", check_opts.seed)->capture_default_str();
    check_cmd->add_option("--tol-scale", check_opts.tolerance_scale,
                          "multiply every check tolerance (testing aid)")
        ->capture_default_str();

    std::vector<std::string> storage{"sinkmd"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        err << sub->help();
        return kInputError;
    }

    try {
        if (solve_cmd->parsed()) return cmd_solve(solve_opts, out);
        if (system_cmd->parsed()) return cmd_system(system_opts, out);
        if (bench_cmd->parsed()) return cmd_bench(bench_opts, out);
        if (check_cmd->parsed()) return cmd_check(check_opts, out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const io::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const RangeError& e) {
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace sinkmd::cli
