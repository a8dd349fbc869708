#include "anderson/model_params.hpp"

#include "anderson/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anderson {

std::string to_string(Equation eq) { return eq == Equation::Heat ? "heat" : "wave"; }

Equation parse_equation(const std::string& s) {
    if (s == "heat") return Equation::Heat;
    if (s == "wave") return Equation::Wave;
    throw std::invalid_argument("unknown equation '" + s + "' (expected heat or wave)");
}

double TemporalKernel::g0(double tau) const {
    const double a = std::abs(tau);
    if (!tabulated()) {
        const double c = std::tgamma(2.0 * h0 + 1.0) * std::sin(M_PI * h0) / (2.0 * M_PI);
        return c * std::pow(a, 1.0 - 2.0 * h0);
    }
    if (a >= table_tau.back()) return a == table_tau.back() ? table_g0.back() : 0.0;
    auto it = std::upper_bound(table_tau.begin(), table_tau.end(), a);
    const auto i = static_cast<std::size_t>(it - table_tau.begin()) - 1;
    const double s = (a - table_tau[i]) / (table_tau[i + 1] - table_tau[i]);
    return (1.0 - s) * table_g0[i] + s * table_g0[i + 1];
}

double NoiseParam::xi_exponent() const {
    return is_regular() ? -regular().alpha : 1.0 - 2.0 * rough().h;
}

NoiseParam make_regular(double alpha, int dim, double h0) {
    NoiseParam p{Regular{alpha, dim}, TemporalKernel{}};
    p.temporal.h0 = h0;
    return p;
}

NoiseParam make_rough(double h, double h0) {
    NoiseParam p{Rough{h}, TemporalKernel{}};
    p.temporal.h0 = h0;
    return p;
}

void check_structure(const NoiseParam& p) {
    const auto& tk = p.temporal;
    if (!(tk.h0 > 0.5 && tk.h0 < 1.0)) throw std::invalid_argument("h0 must lie in (1/2, 1)");
    if (tk.tabulated()) {
        if (p.is_rough()) throw std::invalid_argument("tabulated g0 is supported for the regular case only");
        if (tk.table_tau.size() != tk.table_g0.size() || tk.table_tau.size() < 2)
            throw std::invalid_argument("g0 table needs matching tau/g0 columns with at least 2 rows");
        if (tk.table_tau.front() != 0.0) throw std::invalid_argument("g0 table must start at tau = 0");
        for (std::size_t i = 1; i < tk.table_tau.size(); ++i)
            if (!(tk.table_tau[i] > tk.table_tau[i - 1])) throw std::invalid_argument("g0 table tau must increase");
        for (double g : tk.table_g0)
            if (!(g >= 0.0)) throw std::invalid_argument("g0 table must be non-negative");
    }
    if (p.is_regular()) {
        const auto& r = p.regular();
        if (r.dim < 1) throw std::invalid_argument("dimension must be positive");
        if (!(r.alpha > 0.0 && r.alpha < r.dim)) throw std::invalid_argument("alpha must lie in (0, d)");
    } else {
        const double h = p.rough().h;
        if (!(h > 0.0 && h < 0.5)) throw std::invalid_argument("H must lie in (0, 1/2)");
    }
}

std::string theta_label(const NoiseParam& p) {
    if (p.is_regular())
        return "regular:alpha=" + format_double(p.regular().alpha) + ",d=" + std::to_string(p.regular().dim);
    return "rough:H=" + format_double(p.rough().h);
}

bool same_family(const NoiseParam& a, const NoiseParam& b) {
    return a.is_regular() == b.is_regular() && a.dim() == b.dim();
}

double lower_endpoint_ell(Equation eq, double h0) {
    if (!(h0 > 0.5 && h0 < 1.0)) throw std::domain_error("h0 must lie in (1/2, 1)");
    return eq == Equation::Heat ? std::max(0.75 - h0, 0.0) : 0.25;
}

ExistenceReport validate_existence(const NoiseParam& p, Equation eq) {
    ExistenceReport r;
    if (p.is_regular()) {
        const double s = p.regular().dim - p.regular().alpha;
        if (eq == Equation::Heat || p.temporal.tabulated()) {
            r.condition_checked = "d-alpha<2 (Dalang, necessary and sufficient)";
            r.margin = 2.0 - s;
        } else {
            r.condition_checked = "d-alpha<2H0+1 (wave, fractional time; necessary and sufficient)";
            r.margin = 2.0 * p.temporal.h0 + 1.0 - s;
        }
    } else {
        const double h = p.rough().h;
        if (eq == Equation::Heat) {
            r.condition_checked = "H0+H>3/4 (heat, rough; sufficient condition)";
            r.margin = p.temporal.h0 + h - 0.75;
        } else {
            r.condition_checked = "H>1/4 (wave, rough; sufficient condition)";
            r.margin = h - 0.25;
        }
    }
    r.admissible = r.margin > 0.0;
    return r;
}

void require_admissible(const NoiseParam& p, Equation eq) {
    check_structure(p);
    const auto rep = validate_existence(p, eq);
    if (!rep.admissible)
        throw std::invalid_argument("inadmissible parameter " + theta_label(p) + " for " + to_string(eq) +
                                    ": " + rep.condition_checked + " fails");
}

}  // namespace anderson
