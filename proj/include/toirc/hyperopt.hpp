#pragma once

// Bayesian optimization of the reservoir hyperparameters and the
// scale-free diagnostics used to report them.

#include "error.hpp"
#include "gp.hpp"
#include "linalg.hpp"
#include "random.hpp"
#include "reservoir.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace toirc {

struct Interval {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    /// Searched uniformly in log space.
    bool log_scale = false;
};

/// Search intervals, one per optimized parameter.
struct HyperBounds {
    std::vector<Interval> params;

    void validate() const
    {
        if (params.empty()) {
            throw UsageError("no hyperparameters to optimize");
        }
        for (const auto& p : params) {
            if (!(p.lower < p.upper) || !std::isfinite(p.lower) || !std::isfinite(p.upper)) {
                throw UsageError("interval for " + p.name + " needs lower < upper");
            }
            if (p.log_scale && !(p.lower > 0.0)) {
                throw UsageError("log-scale interval for " + p.name + " must be positive");
            }
        }
    }

    Eigen::Index dim() const { return Eigen::Index(params.size()); }

    /// Parameter point -> unit cube.
    Vector to_unit(const Vector& x) const
    {
        Vector z(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) {
            const auto& p = params[std::size_t(i)];
            z(i) = p.log_scale ? (std::log(x(i)) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower))
                               : (x(i) - p.lower) / (p.upper - p.lower);
        }
        return z;
    }

    /// Unit cube -> parameter point.
    Vector from_unit(const Vector& z) const
    {
        Vector x(dim());
        for (Eigen::Index i = 0; i < dim(); ++i) {
            const auto& p = params[std::size_t(i)];
            const double u = std::clamp(z(i), 0.0, 1.0);
            x(i) = p.log_scale ? std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)))
                               : p.lower + u * (p.upper - p.lower);
        }
        if (x.size() > 0) {
            // Keep the endpoints exact.
            for (Eigen::Index i = 0; i < dim(); ++i) {
                if (z(i) <= 0.0) {
                    x(i) = params[std::size_t(i)].lower;
                } else if (z(i) >= 1.0) {
                    x(i) = params[std::size_t(i)].upper;
                }
            }
        }
        return x;
    }
};

/// Default intervals: alpha linear, input spread sigma_input and rescaled
/// ridge lambda / VAR(x) in log space.
inline HyperBounds default_reservoir_bounds()
{
    return HyperBounds{{{"alpha", 0.1, 2.5, false}, {"sigma_input", 1e-4, 1.0, true}, {"lambda_rescaled", 1e-5, 1e2, true}}};
}

struct BayesOptions {
    int budget = 200;
    GpOptions gp;
    /// Kernel hyperparameters are re-searched every this many acquisitions;
    /// in between only the factorization is updated.
    int refit_interval = 5;
    /// Random candidates scored before local refinement of the best ones.
    int acquisition_candidates = 2048;
    int acquisition_refine = 8;
    int acquisition_evals = 80;
};

struct BayesResult {
    Vector best_point;
    double best_score = -std::numeric_limits<double>::infinity();
    /// Every evaluation in order, points in parameter units.
    std::vector<Observation> trace;
};

using Objective = std::function<double(const Vector&)>;

/// The 3^d initial design: every combination of lower end, middle and upper
/// end of the (possibly log-scaled) intervals, first parameter slowest.
inline std::vector<Vector> initial_design(const HyperBounds& bounds)
{
    const Eigen::Index d = bounds.dim();
    std::size_t count = 1;
    for (Eigen::Index i = 0; i < d; ++i) {
        count *= 3;
    }
    std::vector<Vector> pts;
    for (std::size_t c = 0; c < count; ++c) {
        Vector z(d);
        std::size_t rem = c;
        for (Eigen::Index i = d - 1; i >= 0; --i) {
            z(i) = 0.5 * double(rem % 3);
            rem /= 3;
        }
        pts.push_back(bounds.from_unit(z));
    }
    return pts;
}

namespace detail {

inline double evaluate_objective(const Objective& f, const Vector& x)
{
    std::ostringstream where;
    where.precision(10);
    where << "objective at (";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        where << (i ? ", " : "") << x(i);
    }
    where << ")";
    double score = 0.0;
    try {
        score = f(x);
    } catch (const Error& e) {
        rethrow_with_context(e, where.str());
    } catch (const std::exception& e) {
        throw NumericError(where.str() + ": " + e.what());
    }
    if (!(score >= 0.0 && score <= 1.0)) {
        throw NumericError(where.str() + " returned " + std::to_string(score) + ", outside [0, 1]");
    }
    return score;
}

/// Kernel hyperparameters searched on the first `count` observations.
inline KernelParams fitted_kernel(const std::vector<Observation>& unit_obs, std::size_t count, const Box& cube,
                                  const GpOptions& base, std::uint64_t seed)
{
    GpOptions o = base;
    o.seed = seed ^ (0x9E3779B97F4A7C15ull * std::uint64_t(count));
    const std::vector<Observation> prefix(unit_obs.begin(), unit_obs.begin() + std::ptrdiff_t(count));
    return gp_fit(prefix, cube, o).kernel();
}

/// Maximizes expected improvement over the unit cube.
inline Vector maximize_ei(const GpModel& gp, double best, const std::vector<Observation>& unit_obs,
                          const BayesOptions& opts, std::uint64_t seed, std::size_t iteration)
{
    const Eigen::Index d = gp.bounds().dim();
    CounterRng rng(seed ^ (0xD1B54A32D192ED03ull * (iteration + 1)), streams::acquisition);
    struct Candidate {
        Vector z;
        double ei;
        double sd;
    };
    std::vector<Candidate> cands;
    auto score = [&](const Vector& z) {
        const auto p = gp.predict(z);
        return Candidate{z, expected_improvement(p.mean, p.std, best), p.std};
    };
    for (int c = 0; c < opts.acquisition_candidates; ++c) {
        Vector z(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            z(i) = rng.next_unit();
        }
        cands.push_back(score(z));
    }
    // Local perturbations of the incumbents.
    std::vector<std::size_t> order(unit_obs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return unit_obs[a].score > unit_obs[b].score; });
    for (std::size_t k = 0; k < std::min<std::size_t>(5, order.size()); ++k) {
        for (int j = 0; j < 32; ++j) {
            Vector z = unit_obs[order[k]].point;
            for (Eigen::Index i = 0; i < d; ++i) {
                z(i) = std::clamp(z(i) + 0.05 * rng.next_normal(), 0.0, 1.0);
            }
            cands.push_back(score(z));
        }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });
    Vector best_z = cands.front().z;
    double best_ei = cands.front().ei;
    NelderMeadOptions nm;
    nm.max_evals = opts.acquisition_evals;
    nm.initial_step = 0.02;
    nm.f_tolerance = 0.0;
    const Vector lo = Vector::Zero(d), hi = Vector::Ones(d);
    for (int r = 0; r < std::min<int>(opts.acquisition_refine, int(cands.size())); ++r) {
        auto res = nelder_mead([&](const Vector& z) { return -score(z).ei; }, cands[std::size_t(r)].z, lo, hi, nm);
        if (-res.value > best_ei) {
            best_ei = -res.value;
            best_z = res.x;
        }
    }
    auto is_new = [&](const Vector& z) {
        for (const auto& o : unit_obs) {
            if ((o.point - z).norm() < 1e-9) {
                return false;
            }
        }
        return true;
    };
    if (best_ei > 0.0 && is_new(best_z)) {
        return best_z;
    }
    // EI is flat: fall back to the most uncertain fresh candidate.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.sd > b.sd; });
    for (const auto& c : cands) {
        if (is_new(c.z)) {
            return c.z;
        }
    }
    return cands.front().z;
}

} // namespace detail

/// GP/expected-improvement maximization of objective over bounds.
///
/// Evaluates the 3^d initial design, then repeatedly fits the GP, maximizes
/// EI and evaluates the winner until `budget` evaluations exist. `resume`
/// holds evaluations from an earlier run with the same seed; they are
/// replayed instead of re-evaluated, and the continuation is identical to an
/// uninterrupted run.
inline BayesResult bayes_optimize(const Objective& objective, const HyperBounds& bounds, std::uint64_t seed,
                                  const BayesOptions& opts = {}, const std::vector<Observation>& resume = {})
{
    bounds.validate();
    const Eigen::Index d = bounds.dim();
    const Box cube = Box::unit(d);
    const auto design = initial_design(bounds);
    if (opts.budget < int(design.size())) {
        throw UsageError("budget " + std::to_string(opts.budget) + " is smaller than the initial design (" +
                         std::to_string(design.size()) + ")");
    }
    if (resume.size() > std::size_t(opts.budget)) {
        throw DataError("resume trace is longer than the budget");
    }

    BayesResult res;
    std::vector<Observation> unit_obs;
    auto record = [&](const Vector& x, double score) {
        res.trace.push_back({x, score});
        unit_obs.push_back({bounds.to_unit(x), score});
        if (score > res.best_score) {
            res.best_score = score;
            res.best_point = x;
        }
    };
    for (std::size_t i = 0; i < resume.size(); ++i) {
        if (resume[i].point.size() != d) {
            throw DataError("resume trace entry " + std::to_string(i + 1) + " has the wrong dimension");
        }
        if (i < design.size() && (resume[i].point - design[i]).norm() > 1e-9 * (1.0 + design[i].norm())) {
            throw DataError("resume trace entry " + std::to_string(i + 1) + " does not match the initial design");
        }
        record(resume[i].point, resume[i].score);
    }
    for (std::size_t i = res.trace.size(); i < design.size(); ++i) {
        record(design[i], detail::evaluate_objective(objective, design[i]));
    }

    const std::size_t n0 = design.size();
    const int interval = std::max(opts.refit_interval, 1);
    std::optional<KernelParams> kernel;
    std::size_t kernel_at = 0;
    while (res.trace.size() < std::size_t(opts.budget)) {
        const std::size_t n = res.trace.size();
        const std::size_t refit_at = n0 + ((n - n0) / std::size_t(interval)) * std::size_t(interval);
        if (!kernel || kernel_at != refit_at) {
            kernel = detail::fitted_kernel(unit_obs, refit_at, cube, opts.gp, seed);
            kernel_at = refit_at;
        }
        const GpModel gp(unit_obs, *kernel, cube, opts.gp);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& o : unit_obs) {
            best = std::max(best, o.score);
        }
        const Vector z = detail::maximize_ei(gp, best, unit_obs, opts, seed, n);
        const Vector x = bounds.from_unit(z);
        record(x, detail::evaluate_objective(objective, x));
    }
    return res;
}

// --- trace file -------------------------------------------------------------
//
// One line per evaluation: "iter p1 p2 ... score", iter counting from 1.

inline void append_trace_line(std::ostream& out, std::size_t iter, const Observation& o)
{
    char buf[64];
    out << iter;
    for (Eigen::Index i = 0; i < o.point.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.17g", o.point(i));
        out << buf;
    }
    std::snprintf(buf, sizeof buf, " %.17g", o.score);
    out << buf << '\n';
}

inline void write_trace(const std::filesystem::path& path, const std::vector<Observation>& trace)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write trace " + path.string());
    }
    for (std::size_t i = 0; i < trace.size(); ++i) {
        append_trace_line(out, i + 1, trace[i]);
    }
}

/// Reads a (possibly partial) trace; a truncated final line is dropped.
inline std::vector<Observation> read_trace(const std::filesystem::path& path, Eigen::Index dims)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open trace " + path.string());
    }
    std::vector<Observation> trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::size_t iter = 0;
        Observation o;
        o.point.resize(dims);
        ls >> iter;
        for (Eigen::Index i = 0; i < dims; ++i) {
            ls >> o.point(i);
        }
        ls >> o.score;
        if (in.eof()) {
            // Every complete line ends in a newline; anything else is an interrupted write.
            break;
        }
        if (!ls) {
            throw DataError("malformed trace line " + std::to_string(trace.size() + 1) + " in " + path.string());
        }
        if (iter != trace.size() + 1) {
            throw DataError("trace " + path.string() + " is out of order at line " + std::to_string(trace.size() + 1));
        }
        trace.push_back(std::move(o));
    }
    return trace;
}

// --- rescaled diagnostics ---------------------------------------------------

struct HyperDiagnostics {
    /// Standard deviation of every beta * (M u) entry.
    double sigma_input = 0.0;
    /// lambda / VAR(x) over every state entry.
    double lambda_rescaled = 0.0;
};

/// Mean and population variance of the entries of a set of matrices.
inline std::pair<double, double> entry_moments(std::span<const RowMatrix> blocks)
{
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    for (const auto& b : blocks) {
        sum += b.sum();
        count += std::size_t(b.size());
    }
    if (count == 0) {
        throw DataError("no entries");
    }
    const double mean = sum / double(count);
    for (const auto& b : blocks) {
        sumsq += (b.array() - mean).square().sum();
    }
    return {mean, sumsq / double(count)};
}

/// Standard deviation of the masked, scaled inputs beta * M u over all timesteps.
inline double input_spread(double beta, const InputMask& mask, std::span<const RowMatrix> inputs)
{
    std::vector<RowMatrix> drives;
    drives.reserve(inputs.size());
    for (const auto& u : inputs) {
        drives.push_back(beta * (u * mask.transpose()));
    }
    return std::sqrt(entry_moments(drives).second);
}

inline HyperDiagnostics rescaled_diagnostics(double beta, const InputMask& mask, std::span<const RowMatrix> inputs,
                                             std::span<const RowMatrix> states, double lambda)
{
    if (inputs.empty() || states.empty()) {
        throw DataError("diagnostics need inputs and states");
    }
    HyperDiagnostics d;
    d.sigma_input = input_spread(beta, mask, inputs);
    const double var = entry_moments(states).second;
    if (!(var > 0.0)) {
        throw NumericError("reservoir states have zero variance");
    }
    d.lambda_rescaled = lambda / var;
    return d;
}

} // namespace toirc
