#pragma once

// Sinkhorn as stochastic mirror descent on f(x) = KL(Ax || b).
//
// With the entropy mirror map, a mirror step on f_i with stepsize 1 is the KL
// projection onto {<a_i,x> = b_i} whenever a_i is 0/1, so cyclic steps over
// the row block and the column block of a transport problem reproduce
// Sinkhorn. Dropping the sampling gives Pinkhorn (full-gradient mirror
// descent), greedy sampling gives Greenkhorn.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sinkmd/errors.hpp"
#include "sinkmd/kernel.hpp"
#include "sinkmd/otx.hpp"
#include "sinkmd/penalty.hpp"
#include "sinkmd/projection.hpp"

namespace sinkmd {

enum class Method { sinkhorn, greenkhorn, pinkhorn, acc_pinkhorn, smd };
enum class Sampling { cyclic, uniform, greedy };
enum class StopReason { converged, max_iter, numeric_failure };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::sinkhorn: return "sinkhorn";
        case Method::greenkhorn: return "greenkhorn";
        case Method::pinkhorn: return "pinkhorn";
        case Method::acc_pinkhorn: return "acc_pinkhorn";
        case Method::smd: return "smd";
    }
    return "unknown";
}

inline std::string_view to_string(Sampling s) {
    switch (s) {
        case Sampling::cyclic: return "cyclic";
        case Sampling::uniform: return "uniform";
        case Sampling::greedy: return "greedy";
    }
    return "unknown";
}

inline std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::converged: return "converged";
        case StopReason::max_iter: return "max_iter";
        case StopReason::numeric_failure: return "numeric_failure";
    }
    return "unknown";
}

inline std::optional<Method> parse_method(std::string_view s) {
    for (Method m : {Method::sinkhorn, Method::greenkhorn, Method::pinkhorn, Method::acc_pinkhorn,
                     Method::smd}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

inline std::optional<Sampling> parse_sampling(std::string_view s) {
    for (Sampling m : {Sampling::cyclic, Sampling::uniform, Sampling::greedy}) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

struct SolverConfig {
    Method method = Method::sinkhorn;
    /// Unset: 1 for sinkhorn/greenkhorn, 1/L_block for smd (1 on 0/1 rows),
    /// 1/(number of blocks) for pinkhorn, line-search start for acc_pinkhorn.
    std::optional<double> eta;
    Sampling sampling = Sampling::cyclic;
    /// Stop once the l1 constraint violation is at most tol.
    double tol = 1e-8;
    std::size_t max_iter = 100000;
    std::uint64_t seed = 0;
    /// Record every iteration instead of thinning the trace after 1000.
    bool full_trace = false;
    /// Function-value restart for acc_pinkhorn.
    bool restart = true;

    void validate() const {
        if (!(tol > 0.0)) throw DomainError("SolverConfig: tol must be > 0");
        if (max_iter < 1) throw DomainError("SolverConfig: max_iter must be >= 1");
        if (eta && (!(*eta >= 0.0) || !std::isfinite(*eta))) {
            throw DomainError("SolverConfig: eta must be finite and >= 0");
        }
    }
};

struct TraceEntry {
    std::size_t iter = 0;
    double objective = 0.0;
    double violation_l1 = 0.0;
    double time_ms = 0.0;
};

template <class Solution>
struct SolveReport {
    Solution solution;
    std::size_t iterations = 0;
    StopReason stop_reason = StopReason::max_iter;
    std::vector<TraceEntry> trace;
};

/// Plan returned by the transport solvers; potentials are set by the
/// scaling-form methods (sinkhorn, greenkhorn, pinkhorn).
struct TransportSolution {
    Matrix plan;
    std::optional<Potentials> potentials;
};

using TransportReport = SolveReport<TransportSolution>;
using SystemReport = SolveReport<std::vector<double>>;

struct StopDecision {
    bool stop = false;
    StopReason reason = StopReason::max_iter;
};

inline StopDecision stop_check(const TraceEntry& last, const SolverConfig& cfg) {
    if (!std::isfinite(last.violation_l1) || !std::isfinite(last.objective)) {
        return {true, StopReason::numeric_failure};
    }
    if (last.violation_l1 <= cfg.tol) return {true, StopReason::converged};
    if (last.iter >= cfg.max_iter) return {true, StopReason::max_iter};
    return {false, StopReason::max_iter};
}

inline StopDecision stop_check(std::span<const TraceEntry> trace, const SolverConfig& cfg) {
    if (trace.empty()) return {};
    return stop_check(trace.back(), cfg);
}

/// Default observer: ignores every iterate.
struct NoObserver {
    template <class... Args>
    void operator()(Args&&...) const noexcept {}
};

namespace detail {

/// Wall-clock telemetry with the thinning cadence: every iteration up to
/// 1000, then every 10th, plus whatever the solver forces (the final state).
class TraceRecorder {
public:
    explicit TraceRecorder(bool full) : full_(full), start_(std::chrono::steady_clock::now()) {}

    const TraceEntry& record(std::size_t iter, double objective, double violation,
                             bool force = false) {
        last_ = TraceEntry{iter, objective, violation, elapsed_ms()};
        if (full_ || force || iter <= 1000 || iter % 10 == 0) {
            if (trace_.empty() || trace_.back().iter != iter) trace_.push_back(last_);
        }
        return last_;
    }

    /// Ensures the last computed entry is in the trace.
    void finish() {
        if (trace_.empty() || trace_.back().iter != last_.iter) trace_.push_back(last_);
    }

    std::vector<TraceEntry> take() { return std::move(trace_); }

private:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

    bool full_;
    std::chrono::steady_clock::time_point start_;
    std::vector<TraceEntry> trace_;
    TraceEntry last_;
};

/// Row and column log-marginals of X(u,v) = exp(u_i + logK_ij + v_j).
class LogMarginals {
public:
    explicit LogMarginals(const Matrix& log_kernel)
        : log_kernel_(log_kernel), buf_(log_kernel.cols()) {}

    void rows(std::span<const double> u, std::span<const double> v, std::span<double> out) {
        const std::size_t m = log_kernel_.cols();
        for (std::size_t i = 0; i < log_kernel_.rows(); ++i) {
            const auto k = log_kernel_.row(i);
            for (std::size_t j = 0; j < m; ++j) buf_[j] = k[j] + v[j];
            out[i] = u[i] + log_sum_exp(buf_);
        }
    }

    void cols(std::span<const double> u, std::span<const double> v, std::span<double> out) {
        const std::size_t n = log_kernel_.rows();
        const std::size_t m = log_kernel_.cols();
        col_max_.assign(m, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = log_kernel_.row(i);
            for (std::size_t j = 0; j < m; ++j) col_max_[j] = std::max(col_max_[j], k[j] + u[i]);
        }
        col_sum_.assign(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = log_kernel_.row(i);
            for (std::size_t j = 0; j < m; ++j) col_sum_[j] += std::exp(k[j] + u[i] - col_max_[j]);
        }
        for (std::size_t j = 0; j < m; ++j) out[j] = v[j] + col_max_[j] + std::log(col_sum_[j]);
    }

private:
    const Matrix& log_kernel_;
    std::vector<double> buf_;
    std::vector<double> col_max_;
    std::vector<double> col_sum_;
};

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline std::vector<double> exp_all(std::span<const double> v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::exp(x); });
    return out;
}

inline Matrix plan_or_empty(const OTProblem& problem, const Potentials& pot) {
    try {
        return plan_from_potentials(problem, pot).matrix();
    } catch (const RangeError&) {
        // Underflowed entries are reported as zero mass.
        Matrix x(problem.rows(), problem.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                x(i, j) = std::exp(pot.u[i] - problem.cost()(i, j) / problem.gamma() + pot.v[j]);
            }
        }
        return x;
    }
}

/// Shared driver for methods that update (u, v) from the current log-marginals.
/// `step(iter, u, v, log_rows, log_cols)` mutates u and/or v in place.
template <class Step, class Observer>
TransportReport run_potential_method(const OTProblem& problem, const SolverConfig& cfg, Step step,
                                     Observer& observer) {
    cfg.validate();
    const Matrix log_kernel = gibbs_kernel(problem);
    LogMarginals marginals(log_kernel);
    const std::size_t n = problem.rows();
    const std::size_t m = problem.cols();
    Potentials pot{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
    std::vector<double> log_r(n), log_c(m);
    TraceRecorder recorder(cfg.full_trace);

    const auto measure = [&](std::size_t iter) -> StopDecision {
        marginals.rows(pot.u, pot.v, log_r);
        marginals.cols(pot.u, pot.v, log_c);
        if (!all_finite(log_r) || !all_finite(log_c)) {
            return {true, StopReason::numeric_failure};
        }
        const auto r = exp_all(log_r);
        const auto c = exp_all(log_c);
        if (!all_finite(r) || !all_finite(c)) return {true, StopReason::numeric_failure};
        const double violation = marginal_violation(problem, r, c);
        double objective = std::numeric_limits<double>::infinity();
        try {
            objective = ot_objective_from_marginals(problem, r, c);
        } catch (const DomainError&) {
            return {true, StopReason::numeric_failure};
        }
        return stop_check(recorder.record(iter, objective, violation), cfg);
    };

    TransportReport report;
    StopDecision decision = measure(0);
    observer(std::size_t{0}, std::as_const(pot));
    std::size_t iter = 0;
    while (!decision.stop) {
        ++iter;
        Potentials previous = pot;
        step(iter, pot.u, pot.v, std::span<const double>(log_r), std::span<const double>(log_c));
        decision = measure(iter);
        if (decision.reason == StopReason::numeric_failure && decision.stop) {
            pot = std::move(previous);
            break;
        }
        observer(iter, std::as_const(pot));
    }
    recorder.finish();
    report.iterations = iter;
    report.stop_reason = decision.reason;
    report.trace = recorder.take();
    report.solution.plan = plan_or_empty(problem, pot);
    report.solution.potentials = std::move(pot);
    return report;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic stochastic mirror descent on a constraint system.

/// Mirror step on the block objective sum_{i in block} f_i:
/// log z = log x - eta sum_i grad f_i(x), i.e. z_j = x_j prod_i (b_i/<a_i,x>)^(eta a_ij).
inline void smd_step_inplace(const ConstraintSystem& system, std::span<double> x,
                             std::size_t block, double eta) {
    detail::require_same_size(x.size(), system.dimension(), "smd_step");
    const auto rows = system.block(block);
    // Supports within a block are disjoint, so updating row by row reads
    // only untouched coordinates.
    for (std::size_t i : rows) {
        const auto& h = system.row(i);
        const double ratio = h.b() / detail::checked_dot(h, x, "smd_step");
        for (const auto& e : h.entries()) {
            const double power = eta * e.value;
            x[e.index] *= power == 1.0 ? ratio : std::pow(ratio, power);
        }
    }
    for (const auto& i : rows) {
        for (const auto& e : system.row(i).entries()) {
            if (!(x[e.index] > 0.0) || !std::isfinite(x[e.index])) {
                throw RangeError("smd_step: iterate left the positive orthant at index " +
                                 std::to_string(e.index));
            }
        }
    }
}

inline PositiveVector smd_step(const ConstraintSystem& system, const PositiveVector& x,
                               std::size_t block, double eta) {
    std::vector<double> z = x.vector();
    smd_step_inplace(system, z, block, eta);
    return PositiveVector(std::move(z));
}

/// Runs smd_step with block selection per cfg.sampling until the l1
/// violation drops to cfg.tol. The observer is called as
/// observer(iter, x, block) after every step (block = npos at iter 0).
template <class Observer = NoObserver>
SystemReport solve_smd(const ConstraintSystem& system, const PositiveVector& x0,
                       const SolverConfig& cfg, Observer&& observer = {}) {
    cfg.validate();
    detail::require_same_size(x0.size(), system.dimension(), "solve_smd");
    const std::size_t nb = system.num_blocks();
    std::vector<double> eta(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        eta[k] = cfg.eta ? *cfg.eta : 1.0 / block_smooth_constant(system, k);
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, nb - 1);

    std::vector<double> x = x0.vector();
    std::vector<double> block_kl(nb);
    detail::TraceRecorder recorder(cfg.full_trace);
    const auto measure = [&](std::size_t iter) -> StopDecision {
        const Residual r = eval_f(system, x);
        std::fill(block_kl.begin(), block_kl.end(), 0.0);
        for (std::size_t i = 0; i < r.per_constraint_kl.size(); ++i) {
            block_kl[system.block_of(i)] += r.per_constraint_kl[i];
        }
        return stop_check(recorder.record(iter, r.objective, r.l1_violation), cfg);
    };

    SystemReport report;
    StopDecision decision;
    try {
        decision = measure(0);
    } catch (const std::exception&) {
        throw DomainError("solve_smd: some constraint is not evaluable at x0");
    }
    observer(std::size_t{0}, std::span<const double>(x), static_cast<std::size_t>(-1));
    std::size_t iter = 0;
    while (!decision.stop) {
        ++iter;
        std::size_t block = 0;
        switch (cfg.sampling) {
            case Sampling::cyclic: block = (iter - 1) % nb; break;
            case Sampling::uniform: block = pick(rng); break;
            case Sampling::greedy:
                block = static_cast<std::size_t>(
                    std::max_element(block_kl.begin(), block_kl.end()) - block_kl.begin());
                break;
        }
        std::vector<double> previous = x;
        try {
            smd_step_inplace(system, x, block, eta[block]);
            decision = measure(iter);
        } catch (const std::exception&) {
            decision = {true, StopReason::numeric_failure};
        }
        if (decision.stop && decision.reason == StopReason::numeric_failure) {
            x = std::move(previous);
            break;
        }
        observer(iter, std::span<const double>(x), block);
    }
    recorder.finish();
    report.iterations = iter;
    report.stop_reason = decision.reason;
    report.trace = recorder.take();
    report.solution = std::move(x);
    return report;
}

// ---------------------------------------------------------------------------
// Transport solvers.

/// Log-domain Sinkhorn on the potentials. Odd iterations update u, even
/// iterations update v, so one iteration is one block projection and the
/// iterates coincide with cyclic solve_smd on as_constraint_system(problem).
/// The observer is called as observer(iter, potentials).
template <class Observer = NoObserver>
TransportReport sinkhorn(const OTProblem& problem, const SolverConfig& cfg,
                         Observer&& observer = {}) {
    const double eta = cfg.eta.value_or(1.0);
    std::vector<double> log_p(problem.rows()), log_q(problem.cols());
    for (std::size_t i = 0; i < log_p.size(); ++i) log_p[i] = std::log(problem.p()[i]);
    for (std::size_t j = 0; j < log_q.size(); ++j) log_q[j] = std::log(problem.q()[j]);
    auto step = [&](std::size_t iter, std::vector<double>& u, std::vector<double>& v,
                    std::span<const double> log_r, std::span<const double> log_c) {
        if (iter % 2 == 1) {
            for (std::size_t i = 0; i < u.size(); ++i) u[i] += eta * (log_p[i] - log_r[i]);
        } else {
            for (std::size_t j = 0; j < v.size(); ++j) v[j] += eta * (log_q[j] - log_c[j]);
        }
    };
    return detail::run_potential_method(problem, cfg, step, observer);
}

/// Full-gradient mirror descent on f = f_rows + f_cols:
/// X <- X * (p/r)^eta (q/c)^eta^T. f is 2-relatively smooth, so the default
/// eta = 1/2 makes f non-increasing.
template <class Observer = NoObserver>
TransportReport pinkhorn(const OTProblem& problem, const SolverConfig& cfg,
                         Observer&& observer = {}) {
    const double eta = cfg.eta.value_or(0.5);
    std::vector<double> log_p(problem.rows()), log_q(problem.cols());
    for (std::size_t i = 0; i < log_p.size(); ++i) log_p[i] = std::log(problem.p()[i]);
    for (std::size_t j = 0; j < log_q.size(); ++j) log_q[j] = std::log(problem.q()[j]);
    auto step = [&](std::size_t, std::vector<double>& u, std::vector<double>& v,
                    std::span<const double> log_r, std::span<const double> log_c) {
        for (std::size_t i = 0; i < u.size(); ++i) u[i] += eta * (log_p[i] - log_r[i]);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += eta * (log_q[j] - log_c[j]);
    };
    return detail::run_potential_method(problem, cfg, step, observer);
}

/// Greedy stochastic mirror descent: each iteration applies a stepsize-eta
/// mirror step (eta = 1: the exact projection) to the single row or column
/// constraint with the largest KL violation f_i, ties to the lowest index
/// (rows are 0..N-1, columns N..N+M-1). The observer is called as
/// observer(iter, selected_constraint, violations_before_step).
template <class Observer = NoObserver>
TransportReport greenkhorn(const OTProblem& problem, const SolverConfig& cfg,
                           Observer&& observer = {}) {
    cfg.validate();
    const double eta = cfg.eta.value_or(1.0);
    const std::size_t n = problem.rows();
    const std::size_t m = problem.cols();
    const Matrix log_kernel = gibbs_kernel(problem);
    Potentials pot{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
    Matrix x(n, m);
    for (std::size_t k = 0; k < x.size(); ++k) x.data()[k] = std::exp(log_kernel.data()[k]);
    std::vector<double> r = row_sums(x);
    std::vector<double> c = col_sums(x);
    std::vector<double> kl(n + m);
    detail::TraceRecorder recorder(cfg.full_trace);

    const auto refresh_kl = [&] {
        for (std::size_t i = 0; i < n; ++i) kl[i] = detail::scalar_kl(r[i], problem.p()[i]);
        for (std::size_t j = 0; j < m; ++j) kl[n + j] = detail::scalar_kl(c[j], problem.q()[j]);
    };
    const auto measure = [&](std::size_t iter, bool exact) -> StopDecision {
        if (exact) {
            r = row_sums(x);
            c = col_sums(x);
        }
        if (!detail::all_finite(r) || !detail::all_finite(c) ||
            std::any_of(r.begin(), r.end(), [](double v) { return !(v > 0.0); }) ||
            std::any_of(c.begin(), c.end(), [](double v) { return !(v > 0.0); })) {
            return {true, StopReason::numeric_failure};
        }
        refresh_kl();
        double objective = 0.0;
        for (double v : kl) objective += v;
        return stop_check(recorder.record(iter, objective, marginal_violation(problem, r, c)),
                          cfg);
    };

    TransportReport report;
    StopDecision decision = measure(0, true);
    std::size_t iter = 0;
    std::vector<double> column(n);
    while (!decision.stop) {
        ++iter;
        const std::size_t sel =
            static_cast<std::size_t>(std::max_element(kl.begin(), kl.end()) - kl.begin());
        observer(iter, sel, std::span<const double>(kl));
        if (sel < n) {
            const double log_factor = eta * (std::log(problem.p()[sel]) - std::log(r[sel]));
            const double factor = std::exp(log_factor);
            auto row = x.row(sel);
            for (std::size_t j = 0; j < m; ++j) {
                const double updated = row[j] * factor;
                c[j] += updated - row[j];
                row[j] = updated;
            }
            r[sel] = eta == 1.0 ? problem.p()[sel] : r[sel] * factor;
            pot.u[sel] += log_factor;
        } else {
            const std::size_t j = sel - n;
            const double log_factor = eta * (std::log(problem.q()[j]) - std::log(c[j]));
            const double factor = std::exp(log_factor);
            for (std::size_t i = 0; i < n; ++i) {
                const double updated = x(i, j) * factor;
                r[i] += updated - x(i, j);
                x(i, j) = updated;
            }
            c[j] = eta == 1.0 ? problem.q()[j] : c[j] * factor;
            pot.v[j] += log_factor;
        }
        // Incremental marginals drift; resync periodically and before
        // declaring convergence.
        decision = measure(iter, iter % (n + m) == 0);
        if (decision.stop && decision.reason == StopReason::converged) {
            decision = measure(iter, true);
        }
    }
    recorder.finish();
    report.iterations = iter;
    report.stop_reason = decision.reason;
    report.trace = recorder.take();
    report.solution.plan = std::move(x);
    report.solution.potentials = std::move(pot);
    return report;
}

/// Accelerated Bregman proximal gradient on f(X) = KL(X1 || p) + KL(X^T 1 || q)
/// with triangle-scaling exponent 2. The coupling is taken in log space,
///   Y  = X^(1 - t) Z^t
///   Z+ = Z * exp(-grad f(Y) / (t L))
///   X+ = X^(1 - t) Z+^t
/// so every iterate stays of the form diag(e^u) X0 diag(e^v) and the limit
/// is the entropic plan. L is backtracked (doubled) until
/// f(X+) <= f(Y) + <grad f(Y), X+ - Y> + t^2 L KL(Z+ || Z) and halved after
/// every accepted step; t follows (1 - t+)/t+^2 = 1/t^2. With restart
/// enabled, a step that increases f is discarded and the sequence restarts
/// from Z = X, t = 1, which makes the recorded f non-increasing.
inline TransportReport acc_pinkhorn(const OTProblem& problem, const SolverConfig& cfg) {
    cfg.validate();
    constexpr int kMaxBacktracks = 60;
    const std::size_t n = problem.rows();
    const std::size_t m = problem.cols();
    const Matrix log_kernel = gibbs_kernel(problem);
    detail::LogMarginals log_marginals(log_kernel);

    // X, Y and Z are carried as potentials; the marginals are all the
    // backtracking test needs:
    //   <grad f(Y), X+ - Y> = <gr, r+ - rY> + <gc, c+ - cY>
    //   KL(Z+ || Z) = -s (<gr, rZ+> + <gc, cZ+>) - |Z+| + |Z|,  s = 1/(t L).
    struct Point {
        Potentials pot;
        std::vector<double> r, c;
        double mass = 0.0;
        double f = 0.0;
    };
    const auto evaluate = [&](Point& pt) {
        pt.r.resize(n);
        pt.c.resize(m);
        log_marginals.rows(pt.pot.u, pt.pot.v, pt.r);
        log_marginals.cols(pt.pot.u, pt.pot.v, pt.c);
        for (double& e : pt.r) e = std::exp(e);
        for (double& e : pt.c) e = std::exp(e);
        const auto ok = [](double e) { return e > 0.0 && std::isfinite(e); };
        if (!std::all_of(pt.r.begin(), pt.r.end(), ok) ||
            !std::all_of(pt.c.begin(), pt.c.end(), ok)) {
            return false;
        }
        pt.mass = std::accumulate(pt.r.begin(), pt.r.end(), 0.0);
        pt.f = ot_objective_from_marginals(problem, pt.r, pt.c);
        return std::isfinite(pt.f);
    };
    const auto mix = [&](const Potentials& a, const Potentials& b, double t, Potentials& out) {
        for (std::size_t i = 0; i < n; ++i) out.u[i] = (1.0 - t) * a.u[i] + t * b.u[i];
        for (std::size_t j = 0; j < m; ++j) out.v[j] = (1.0 - t) * a.v[j] + t * b.v[j];
    };

    const Potentials zero{std::vector<double>(n, 0.0), std::vector<double>(m, 0.0)};
    Point x{zero, {}, {}}, z{zero, {}, {}}, y{zero, {}, {}}, x_next{zero, {}, {}},
        z_next{zero, {}, {}};
    if (!evaluate(x)) throw RangeError("acc_pinkhorn: initial plan is not representable");
    z = x;
    double lipschitz = 1.0 / cfg.eta.value_or(0.5);
    double theta = 1.0;
    std::vector<double> grad_r(n), grad_c(m);

    detail::TraceRecorder recorder(cfg.full_trace);
    TransportReport report;
    StopDecision decision =
        stop_check(recorder.record(0, x.f, marginal_violation(problem, x.r, x.c)), cfg);
    std::size_t iter = 0;

    while (!decision.stop) {
        ++iter;
        bool accepted = false;
        for (int attempt = 0; attempt < 4 * kMaxBacktracks && !accepted; ++attempt) {
            mix(x.pot, z.pot, theta, y.pot);
            if (!evaluate(y)) break;
            for (std::size_t i = 0; i < n; ++i) grad_r[i] = std::log(y.r[i] / problem.p()[i]);
            for (std::size_t j = 0; j < m; ++j) grad_c[j] = std::log(y.c[j] / problem.q()[j]);

            int backtracks = 0;
            for (; backtracks < kMaxBacktracks; ++backtracks) {
                const double step = 1.0 / (theta * lipschitz);
                for (std::size_t i = 0; i < n; ++i) z_next.pot.u[i] = z.pot.u[i] - step * grad_r[i];
                for (std::size_t j = 0; j < m; ++j) z_next.pot.v[j] = z.pot.v[j] - step * grad_c[j];
                mix(x.pot, z_next.pot, theta, x_next.pot);
                if (evaluate(z_next) && evaluate(x_next)) {
                    double linear = 0.0;
                    double pairing = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        linear += grad_r[i] * (x_next.r[i] - y.r[i]);
                        pairing += grad_r[i] * z_next.r[i];
                    }
                    for (std::size_t j = 0; j < m; ++j) {
                        linear += grad_c[j] * (x_next.c[j] - y.c[j]);
                        pairing += grad_c[j] * z_next.c[j];
                    }
                    const double divergence = std::max(0.0, -step * pairing - z_next.mass + z.mass);
                    const double bound = y.f + linear + theta * theta * lipschitz * divergence;
                    if (x_next.f <= bound + 1e-15 * std::max(1.0, std::abs(y.f))) break;
                }
                lipschitz *= 2.0;
            }
            if (backtracks == kMaxBacktracks) break;

            if (cfg.restart && x_next.f > x.f + 1e-15 * std::max(1.0, x.f) && theta < 1.0) {
                z = x;
                theta = 1.0;
                continue;
            }
            std::swap(x, x_next);
            std::swap(z, z_next);
            const double t2 = theta * theta;
            theta = 0.5 * (std::sqrt(t2 * t2 + 4.0 * t2) - t2);
            lipschitz *= 0.5;
            accepted = true;
        }
        if (!accepted) {
            decision = {true, StopReason::numeric_failure};
            --iter;
            break;
        }
        decision = stop_check(recorder.record(iter, x.f, marginal_violation(problem, x.r, x.c)), cfg);
    }
    recorder.finish();
    report.iterations = iter;
    report.stop_reason = decision.reason;
    report.trace = recorder.take();
    report.solution.plan = detail::plan_or_empty(problem, x.pot);
    report.solution.potentials = std::move(x.pot);
    return report;
}

/// Solves the transport problem with cfg.method; smd runs solve_smd on
/// as_constraint_system(problem) from vec(X0) and reshapes the result.
inline TransportReport solve(const OTProblem& problem, const SolverConfig& cfg) {
    switch (cfg.method) {
        case Method::sinkhorn: return sinkhorn(problem, cfg);
        case Method::greenkhorn: return greenkhorn(problem, cfg);
        case Method::pinkhorn: return pinkhorn(problem, cfg);
        case Method::acc_pinkhorn: return acc_pinkhorn(problem, cfg);
        case Method::smd: {
            const ConstraintSystem system = as_constraint_system(problem);
            const Matrix log_kernel = gibbs_kernel(problem);
            auto x0 = grad_conjugate(log_kernel.data());
            SystemReport sr = solve_smd(system, x0, cfg);
            TransportReport report;
            report.iterations = sr.iterations;
            report.stop_reason = sr.stop_reason;
            report.trace = std::move(sr.trace);
            report.solution.plan = Matrix(problem.rows(), problem.cols(), std::move(sr.solution));
            return report;
        }
    }
    throw DomainError("solve: unknown method");
}

}  // namespace sinkmd
