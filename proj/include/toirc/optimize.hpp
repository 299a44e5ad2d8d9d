#pragma once

// Box-constrained Nelder-Mead used by the GP hyperparameter fit and the
// acquisition maximizer. Points are clamped into the box before evaluation.

#include "linalg.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace toirc {

struct NelderMeadOptions {
    int max_evals = 200;
    /// Initial simplex edge as a fraction of the box width.
    double initial_step = 0.1;
    /// Stop once the spread of simplex values drops below this.
    double f_tolerance = 1e-10;
};

struct MinimizeResult {
    Vector x;
    double value = std::numeric_limits<double>::infinity();
    int evals = 0;
};

inline MinimizeResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start,
                                  const Vector& lower, const Vector& upper, const NelderMeadOptions& opts = {})
{
    const Eigen::Index d = start.size();
    auto clamp = [&](Vector v) {
        for (Eigen::Index i = 0; i < d; ++i) {
            v(i) = std::clamp(v(i), lower(i), upper(i));
        }
        return v;
    };
    MinimizeResult res;
    auto eval = [&](const Vector& v) {
        ++res.evals;
        const double y = f(v);
        return std::isfinite(y) ? y : std::numeric_limits<double>::max();
    };

    std::vector<Vector> simplex;
    std::vector<double> values;
    simplex.push_back(clamp(start));
    values.push_back(eval(simplex[0]));
    for (Eigen::Index i = 0; i < d; ++i) {
        Vector v = simplex[0];
        const double step = opts.initial_step * (upper(i) - lower(i));
        v(i) = (v(i) + step <= upper(i)) ? v(i) + step : v(i) - step;
        simplex.push_back(clamp(v));
        values.push_back(eval(simplex.back()));
    }
    std::vector<std::size_t> order(simplex.size());
    while (res.evals < opts.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        if (values[worst] - values[best] < opts.f_tolerance) {
            break;
        }
        Vector centroid = Vector::Zero(d);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            centroid += simplex[order[i]];
        }
        centroid /= double(d);
        const Vector reflected = clamp(centroid + (centroid - simplex[worst]));
        const double fr = eval(reflected);
        if (fr < values[best]) {
            const Vector expanded = clamp(centroid + 2.0 * (centroid - simplex[worst]));
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Vector contracted =
            clamp(outside ? centroid + 0.5 * (reflected - centroid) : centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) {
                continue;
            }
            simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
            values[i] = eval(simplex[i]);
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    res.x = simplex[std::size_t(it - values.begin())];
    res.value = *it;
    return res;
}

} // namespace toirc
