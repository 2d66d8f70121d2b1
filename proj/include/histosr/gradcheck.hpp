#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "histosr/errors.hpp"

namespace histosr {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t excluded_coords = 0;  // perturbation crossed a kink; not compared
};

// Objective value plus a fingerprint of the piecewise-linear region the
// evaluation ran in (pool argmax choices, activation signs). Two evaluations
// with different signatures straddle a kink, where central differences say
// nothing about the analytic gradient.
struct ProbedValue {
    double value = 0.0;
    std::uint64_t kink_signature = 0;
};

// Central finite differences in double precision against an analytic
// gradient. `f` re-evaluates the scalar objective at the current point; `x`
// is perturbed one coordinate at a time and restored. Coordinates whose +-h
// evaluations report different kink signatures are excluded and counted
// rather than compared. The relative error denominator is floored so
// coordinates where both gradients vanish do not dominate.
inline GradCheckReport check_gradient_probed(
    const std::function<ProbedValue(std::span<const double>)>& f, std::span<double> x,
    std::span<const double> analytic, double step, double denom_floor = 1e-6) {
    if (x.size() != analytic.size()) {
        throw ShapeError("check_gradient: point has " + std::to_string(x.size()) +
                         " coordinates but gradient has " + std::to_string(analytic.size()));
    }
    GradCheckReport rep;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + step;
        const ProbedValue fp = f(x);
        x[i] = x0 - step;
        const ProbedValue fm = f(x);
        x[i] = x0;
        if (!std::isfinite(fp.value) || !std::isfinite(fm.value)) {
            throw NumericError("check_gradient: non-finite objective at coordinate " +
                               std::to_string(i));
        }
        if (fp.kink_signature != fm.kink_signature) {
            ++rep.excluded_coords;
            continue;
        }
        const double numeric = (fp.value - fm.value) / (2.0 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), denom_floor});
        const double rel = std::abs(numeric - analytic[i]) / denom;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_coord = i;
            rep.worst_analytic = analytic[i];
            rep.worst_numeric = numeric;
        }
    }
    return rep;
}

// Plain variant for objectives without kinks (or with sample points already
// held clear of them).
inline GradCheckReport check_gradient(const std::function<double(std::span<const double>)>& f,
                                      std::span<double> x, std::span<const double> analytic,
                                      double step, double denom_floor = 1e-6) {
    return check_gradient_probed(
        [&f](std::span<const double> p) { return ProbedValue{f(p), 0}; }, x, analytic, step,
        denom_floor);
}

}  // namespace histosr
