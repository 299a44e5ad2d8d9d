#pragma once

// Gaussian-process regression with an ARD squared-exponential kernel and the
// expected-improvement acquisition (maximization).

#include "error.hpp"
#include "linalg.hpp"
#include "optimize.hpp"
#include "random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toirc {

struct Observation {
    Vector point;
    double score = 0.0;
};

/// Axis-aligned box.
struct Box {
    Vector lower;
    Vector upper;

    Eigen::Index dim() const { return lower.size(); }
    bool contains(const Vector& p, double slack = 1e-12) const
    {
        if (p.size() != dim()) {
            return false;
        }
        for (Eigen::Index i = 0; i < dim(); ++i) {
            const double w = upper(i) - lower(i);
            if (p(i) < lower(i) - slack * w || p(i) > upper(i) + slack * w) {
                return false;
            }
        }
        return true;
    }
    static Box unit(Eigen::Index d) { return {Vector::Zero(d), Vector::Ones(d)}; }
};

struct KernelParams {
    Vector length_scales;
    double signal_variance = 1.0;
    double noise_variance = 1e-6;
};

struct GpOptions {
    int starts = 16;
    std::uint64_t seed = 0;
    /// Lower bound on the noise variance. Zero fixes the noise at zero
    /// (interpolating GP, with a tiny diagonal jitter for the factorization).
    double noise_floor = 1e-6;
    int evals_per_start = 200;
    /// Relative diagonal jitter for noiseless fits.
    double jitter = 1e-10;
};

class GpModel {
public:
    GpModel(std::vector<Observation> obs, KernelParams kernel, Box bounds, const GpOptions& opts)
        : obs_(std::move(obs)), kernel_(std::move(kernel)), bounds_(std::move(bounds)), opts_(opts)
    {
        factorize();
    }

    const KernelParams& kernel() const { return kernel_; }
    const Box& bounds() const { return bounds_; }
    const std::vector<Observation>& observations() const { return obs_; }
    double prior_mean() const { return prior_mean_; }
    double log_marginal_likelihood() const { return log_ml_; }

    double covariance(const Vector& a, const Vector& b) const
    {
        const double r2 = ((a - b).array() / kernel_.length_scales.array()).square().sum();
        return kernel_.signal_variance * std::exp(-0.5 * r2);
    }

    struct Prediction {
        double mean = 0.0;
        double std = 0.0;
    };

    /// Posterior mean and standard deviation of the latent function.
    Prediction predict(const Vector& p) const
    {
        if (!bounds_.contains(p)) {
            throw UsageError("GP query point outside the bounds");
        }
        const Eigen::Index n = Eigen::Index(obs_.size());
        Vector k(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            k(i) = covariance(p, obs_[std::size_t(i)].point);
        }
        const Vector v = llt_.matrixL().solve(k);
        const double var = std::max(kernel_.signal_variance - v.squaredNorm(), 0.0);
        return {prior_mean_ + k.dot(weights_), std::sqrt(var)};
    }

private:
    void factorize()
    {
        const Eigen::Index n = Eigen::Index(obs_.size());
        Vector y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y(i) = obs_[std::size_t(i)].score;
        }
        prior_mean_ = y.mean();
        Matrix gram(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                gram(i, j) = gram(j, i) = covariance(obs_[std::size_t(i)].point, obs_[std::size_t(j)].point);
            }
        }
        const double diag = kernel_.noise_variance + (opts_.noise_floor == 0.0 ? opts_.jitter * kernel_.signal_variance : 0.0);
        gram.diagonal().array() += diag;
        llt_.compute(gram);
        if (llt_.info() != Eigen::Success) {
            throw NumericError("GP Gram matrix is not positive definite");
        }
        const Vector centered = y.array() - prior_mean_;
        weights_ = llt_.solve(centered);
        const double logdet = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
        log_ml_ = -0.5 * centered.dot(weights_) - 0.5 * logdet - 0.5 * double(n) * std::log(2.0 * std::numbers::pi);
    }

    std::vector<Observation> obs_;
    KernelParams kernel_;
    Box bounds_;
    GpOptions opts_;
    double prior_mean_ = 0.0;
    Eigen::LLT<Matrix> llt_;
    Vector weights_;
    double log_ml_ = 0.0;
};

namespace detail {

/// Search box for log(length scales), log(signal var), log(noise var).
struct KernelSearchSpace {
    Vector lower;
    Vector upper;
    bool fit_noise = true;
};

inline KernelSearchSpace kernel_search_space(const std::vector<Observation>& obs, const Box& bounds,
                                             const GpOptions& opts)
{
    const Eigen::Index d = bounds.dim();
    double mean = 0.0;
    for (const auto& o : obs) {
        mean += o.score;
    }
    mean /= double(obs.size());
    double var = 0.0;
    for (const auto& o : obs) {
        var += (o.score - mean) * (o.score - mean);
    }
    var /= double(obs.size());
    const double scale = std::max(var, 1e-4);
    KernelSearchSpace s;
    s.fit_noise = opts.noise_floor > 0.0;
    const Eigen::Index dims = d + 1 + (s.fit_noise ? 1 : 0);
    s.lower.resize(dims);
    s.upper.resize(dims);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double w = bounds.upper(i) - bounds.lower(i);
        s.lower(i) = std::log(0.01 * w);
        s.upper(i) = std::log(10.0 * w);
    }
    s.lower(d) = std::log(1e-3 * scale);
    s.upper(d) = std::log(100.0 * scale);
    if (s.fit_noise) {
        s.lower(d + 1) = std::log(opts.noise_floor);
        s.upper(d + 1) = std::log(std::max(scale, 10.0 * opts.noise_floor));
    }
    return s;
}

inline KernelParams unpack_kernel(const Vector& theta, Eigen::Index d, bool fit_noise, double noise_floor)
{
    KernelParams k;
    k.length_scales = theta.head(d).array().exp();
    k.signal_variance = std::exp(theta(d));
    k.noise_variance = fit_noise ? std::exp(theta(d + 1)) : noise_floor;
    return k;
}

} // namespace detail

/// Fits kernel hyperparameters by maximizing the log marginal likelihood
/// with a seeded multi-start Nelder-Mead search, then caches the Cholesky
/// factorization. The first start is the center of the search box.
inline GpModel gp_fit(const std::vector<Observation>& obs, const Box& bounds, const GpOptions& opts = {})
{
    if (obs.size() < 2) {
        throw DataError("GP fit needs at least 2 observations");
    }
    for (const auto& o : obs) {
        if (o.point.size() != bounds.dim() || !o.point.allFinite() || !std::isfinite(o.score)) {
            throw DataError("GP observation has the wrong dimension or non-finite values");
        }
    }
    if (opts.noise_floor == 0.0) {
        for (std::size_t i = 0; i < obs.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                if (obs[i].point == obs[j].point && obs[i].score != obs[j].score) {
                    throw DataError("duplicate GP points with conflicting scores at zero noise");
                }
            }
        }
    }
    const auto space = detail::kernel_search_space(obs, bounds, opts);
    const Eigen::Index d = bounds.dim();
    auto negative_lml = [&](const Vector& theta) {
        try {
            return -GpModel(obs, detail::unpack_kernel(theta, d, space.fit_noise, opts.noise_floor), bounds, opts)
                        .log_marginal_likelihood();
        } catch (const NumericError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    CounterRng rng(opts.seed, streams::gp_starts);
    NelderMeadOptions nm;
    nm.max_evals = opts.evals_per_start;
    MinimizeResult best;
    for (int s = 0; s < std::max(opts.starts, 1); ++s) {
        Vector start(space.lower.size());
        for (Eigen::Index i = 0; i < start.size(); ++i) {
            const double u = s == 0 ? 0.5 : rng.next_unit();
            start(i) = space.lower(i) + u * (space.upper(i) - space.lower(i));
        }
        auto r = nelder_mead(negative_lml, start, space.lower, space.upper, nm);
        if (r.value < best.value) {
            best = std::move(r);
        }
    }
    if (!std::isfinite(best.value)) {
        throw NumericError("GP likelihood search found no positive-definite kernel");
    }
    return GpModel(obs, detail::unpack_kernel(best.x, d, space.fit_noise, opts.noise_floor), bounds, opts);
}

/// Standard normal density and distribution function.
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// E[max(Y - best, 0)] for Y ~ N(mean, sd^2).
inline double expected_improvement(double mean, double sd, double best)
{
    const double gap = mean - best;
    if (!(sd > 0.0)) {
        return std::max(gap, 0.0);
    }
    const double z = gap / sd;
    return std::max(gap * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

inline double expected_improvement(const GpModel& m, const Vector& p, double best)
{
    const auto pred = m.predict(p);
    return expected_improvement(pred.mean, pred.std, best);
}

} // namespace toirc
