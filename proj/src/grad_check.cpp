#include "nh2st/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace nh2st {

GradCheckReport grad_check(const std::function<double(const ParamTree&)>& f,
                           const ParamTree& analytic_grad, const ParamTree& p, double eps) {
    if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
    if (!analytic_grad.same_structure(p))
        throw std::invalid_argument("grad_check: gradient/parameter structure mismatch");

    ParamTree work = p;
    GradCheckReport report;
    for (auto& [path, m] : work) {
        const Matrix& a = analytic_grad.at(path);
        auto entries = m.data();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const double saved = entries[i];
            entries[i] = saved + eps;
            const double fp = f(work);
            entries[i] = saved - eps;
            const double fm = f(work);
            entries[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("grad_check: non-finite f at perturbed '" + path + "'");
            const double fd = (fp - fm) / (2.0 * eps);
            const double an = a[i];
            const double rel = std::abs(an - fd) / std::max(1e-8, std::abs(an) + std::abs(fd));
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_path = path;
                report.worst_index = i;
                report.worst_analytic = an;
                report.worst_fd = fd;
            }
        }
    }
    return report;
}

}  // namespace nh2st
