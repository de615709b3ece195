#pragma once

#include <functional>
#include <string>

#include "nh2st/param_tree.hpp"

namespace nh2st {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_path;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_fd = 0.0;
};

/// Central-difference check of an analytic gradient. For every leaf entry
/// of p, compares (f(p+eps*e) - f(p-eps*e)) / (2*eps) against the matching
/// entry of analytic_grad using |a-fd| / max(1e-8, |a|+|fd|), and reports
/// the maximum. Throws if f is non-finite at any perturbed point.
GradCheckReport grad_check(const std::function<double(const ParamTree&)>& f,
                           const ParamTree& analytic_grad, const ParamTree& p, double eps);

}  // namespace nh2st
