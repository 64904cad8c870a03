// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "signpose/ndcore/parameter.hpp"

namespace signpose::nd {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t checked = 0;
    std::string worst_name;  // parameter name, when checking parameter lists

    bool passed(double tol) const { return max_rel_error < tol; }

    void merge(const GradCheckReport& other) {
        checked += other.checked;
        if (other.max_rel_error > max_rel_error) {
            const std::size_t n = checked;
            *this = other;
            checked = n;
        }
    }
};

/// |a - n| / max(1, |a|, |n|)
inline double gradient_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

/// Compares `analytic` against central differences of `f` at `point`.
inline GradCheckReport finite_difference_check(const std::function<double(std::span<const double>)>& f,
                                               std::span<const double> point, std::span<const double> analytic,
                                               double h = 1e-5) {
    if (point.size() != analytic.size()) throw ShapeError("finite_difference_check: gradient length mismatch");
    GradCheckReport r;
    std::vector<double> x(point.begin(), point.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double err = gradient_error(analytic[i], numeric);
        if (err > r.max_rel_error || r.checked == 0) {
            r.max_rel_error = err;
            r.worst_index = i;
            r.analytic_at_worst = analytic[i];
            r.numeric_at_worst = numeric;
        }
        ++r.checked;
    }
    return r;
}

/// Perturbs each scalar of each parameter in place and re-evaluates `loss`.
/// Analytic gradients are read from Parameter::grad, which the caller must
/// have populated at the unperturbed point.
inline GradCheckReport check_parameter_gradients(const ParameterRefs<double>& params,
                                                 const std::function<double()>& loss, double h = 1e-5) {
    GradCheckReport total;
    for (auto* p : params) {
        const std::vector<double> analytic(p->grad.values().begin(), p->grad.values().end());
        auto f = [&](std::span<const double> v) {
            std::copy(v.begin(), v.end(), p->value.data());
            return loss();
        };
        const std::vector<double> point(p->value.values().begin(), p->value.values().end());
        GradCheckReport r = finite_difference_check(f, point, analytic, h);
        std::copy(point.begin(), point.end(), p->value.data());
        r.worst_name = p->name;
        total.merge(r);
    }
    return total;
}

}  // namespace signpose::nd
