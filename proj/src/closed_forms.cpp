#include "anderson/closed_forms.hpp"

#include "anderson/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace anderson {

namespace {

void require_strip(int d, double alpha) {
    if (d < 1) throw std::domain_error("dimension must be positive");
    if (!(alpha > std::max(d - 2, 0) && alpha < d))
        throw std::domain_error("alpha must lie in (max(d-2,0), d), got " + format_double(alpha));
}

}  // namespace

double simplex_power_integral(double t, const Eigen::ArrayXd& betas) {
    if (!(t > 0.0)) throw std::domain_error("simplex_power_integral needs t > 0");
    const auto n = static_cast<double>(betas.size());
    double log_num = 0.0;
    for (double b : betas) {
        if (!(b > -1.0)) throw std::domain_error("simplex exponents must exceed -1");
        log_num += std::lgamma(b + 1.0);
    }
    const double s = betas.sum() + n;
    return std::exp(log_num + s * std::log(t) - std::lgamma(s + 1.0));
}

double gaussian_freq_moment(double t, double a) {
    if (!(t > 0.0) || !(a > -1.0)) throw std::domain_error("gaussian_freq_moment needs t > 0, a > -1");
    return std::tgamma((1.0 + a) / 2.0) * std::pow(t, -(1.0 + a) / 2.0);
}

double wave_freq_moment(double t, double a) {
    if (!(t > 0.0) || !(std::abs(a) < 1.0)) throw std::domain_error("wave_freq_moment needs t > 0, |a| < 1");
    double c;
    if (a > 0.0)
        c = std::tgamma(a) * std::sin(M_PI * a / 2.0) / (1.0 - a);
    else if (a < 0.0)
        c = std::tgamma(1.0 + a) * std::sin(M_PI * a / 2.0) / (a * (1.0 - a));
    else
        c = M_PI / 2.0;
    return std::pow(2.0, 1.0 - a) * c * std::pow(t, 1.0 - a);
}

double sphere_area(int d) {
    if (d < 1) throw std::domain_error("sphere_area needs d >= 1");
    if (d == 1) return 2.0;
    return 2.0 * std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0);
}

TimeConstants riesz_time_constants(double h0) {
    if (!(h0 > 0.5 && h0 < 1.0)) throw std::domain_error("h0 must lie in (1/2, 1)");
    return {h0 * (2.0 * h0 - 1.0), riesz_space_constant(h0)};
}

double riesz_space_constant(double h) {
    if (!(h > 0.0 && h < 1.0)) throw std::domain_error("H must lie in (0, 1)");
    return std::tgamma(2.0 * h + 1.0) * std::sin(M_PI * h) / (2.0 * M_PI);
}

DalangConstant dalang_constant(int d, double alpha) {
    require_strip(d, alpha);
    const double s = d - alpha;
    const double beta = d - 1.0 - alpha;
    HalfLineSpec spec;
    spec.beta_exact = beta;
    spec.inner_levels = 14;
    spec.outer_panels = 10;
    spec.nodes = 16;
    spec.singular_nodes = 16;
    spec.tail_nodes = 24;
    spec.tail_power = 1.0 / (1.0 - beta);
    const QuadRule rule = half_line_rule(spec);
    const Eigen::ArrayXd f = rule.x.pow(beta) / (1.0 + rule.x.square());
    const double cd = sphere_area(d);
    DalangConstant k;
    k.value = cd * (rule.w * f).sum();
    k.bound = cd * (1.0 / s + 1.0 / (2.0 - s));
    k.r_heat = -s / 2.0;
    k.r_wave = 2.0 - s;
    return k;
}

double heat_k_alpha(double t, int d, double alpha) {
    require_strip(d, alpha);
    if (!(t > 0.0)) throw std::domain_error("heat_k_alpha needs t > 0");
    const double s = d - alpha;
    return sphere_area(d) / 2.0 * std::tgamma(s / 2.0) * std::pow(t, -s / 2.0);
}

double gamma0_window(double t, double h0) {
    if (!(h0 > 0.5 && h0 < 1.0)) throw std::domain_error("h0 must lie in (1/2, 1)");
    if (!(t > 0.0)) throw std::domain_error("gamma0_window needs t > 0");
    return 2.0 * h0 * std::pow(t, 2.0 * h0 - 1.0);
}

namespace {

double tail_rate(Equation eq, int d, double a) {
    return eq == Equation::Heat ? 1.0 - (d - a) / 2.0 : 3.0 - d + a;
}

// log of the k-independent factor of the dominating series term and the rates
struct SeriesShape {
    double log_base;  // log(Gamma0 K Gamma(.) (t v 1)^{.})
    double rate;      // argument slope of the denominator Gamma
};

SeriesShape series_shape(Equation eq, int d, double a, double b, double t, double gamma0t) {
    require_strip(d, a);
    require_strip(d, b);
    if (!(a < b)) throw std::domain_error("tail bound needs a < b");
    if (!(t > 0.0) || !(gamma0t > 0.0)) throw std::domain_error("tail bound needs t > 0 and Gamma0 > 0");
    const double kab = sphere_area(d) * (1.0 / (d - b) + 1.0 / (2.0 - (d - a)));
    const double tt = std::log(std::max(t, 1.0));
    SeriesShape s;
    s.rate = tail_rate(eq, d, a);
    if (eq == Equation::Heat)
        s.log_base = std::log(gamma0t * kab) + std::lgamma(s.rate) + (1.0 - (d - b) / 2.0) * tt;
    else
        s.log_base = std::log(gamma0t * kab * 2.0) + (3.0 - d + b) * tt;
    return s;
}

}  // namespace

int tail_threshold(Equation eq, int d, double a) {
    require_strip(d, a);
    const double rate = tail_rate(eq, d, a);
    int m = static_cast<int>(std::floor(kGammaArgmin / rate)) + 1;
    while (m * rate <= kGammaArgmin) ++m;
    return std::max(m, 1);
}

double dominating_term(Equation eq, int d, double a, double b, double t, int k, double gamma0t) {
    if (k < 1) throw std::domain_error("series index must be positive");
    const SeriesShape s = series_shape(eq, d, a, b, t, gamma0t);
    return std::exp(k * s.log_base - std::lgamma(k * s.rate + 1.0));
}

double chaos_tail_bound(Equation eq, int d, double a, double b, double t, int m, double gamma0t) {
    const int m0 = tail_threshold(eq, d, a);
    if (m < m0)
        throw std::domain_error("tail bound needs m >= m0 = " + std::to_string(m0) + ", got " + std::to_string(m));
    const SeriesShape s = series_shape(eq, d, a, b, t, gamma0t);
    double log_sum = -std::numeric_limits<double>::infinity();
    double prev = log_sum;
    constexpr long kMaxTerms = 50'000'000;
    for (long k = m + 1; k < m + 1 + kMaxTerms; ++k) {
        const double lt = k * s.log_base - std::lgamma(k * s.rate + 1.0);
        const double hi = std::max(log_sum, lt);
        log_sum = hi + std::log(std::exp(log_sum - hi) + std::exp(lt - hi));
        if (lt < prev && lt < log_sum + std::log(1e-16)) return std::exp(log_sum);
        prev = lt;
    }
    throw std::runtime_error("dominating series did not settle within the term budget");
}

double moment_bound_term(Equation eq, int d, double alpha, double t, int k, double gamma0t) {
    require_strip(d, alpha);
    if (k < 0) throw std::domain_error("chaos order must be non-negative");
    if (k == 0) return 1.0;
    const DalangConstant kc = dalang_constant(d, alpha);
    const double r1 = kc.r(eq) + 1.0;
    return std::exp(k * (std::log(gamma0t * kc.value) + std::lgamma(r1) + r1 * std::log(t)) -
                    std::lgamma(k * r1 + 1.0));
}

RoughConstants rough_constants(Equation eq, double h, double h0) {
    if (!(h > 0.0 && h < 0.5)) throw std::domain_error("H must lie in (0, 1/2)");
    if (!(h0 > 0.5 && h0 < 1.0)) throw std::domain_error("h0 must lie in (1/2, 1)");
    auto gamma_pos = [](double x) {
        if (!(x > 0.0)) throw std::domain_error("non-positive Gamma argument " + format_double(x));
        return std::tgamma(x);
    };
    RoughConstants c;
    if (eq == Equation::Heat) {
        c.c_h1 = std::max({std::tgamma(0.5), gamma_pos(1.0 - h), gamma_pos((3.0 - 4.0 * h) / 2.0)});
        c.c_h2 = std::max({gamma_pos(1.0 - 1.0 / (4.0 * h0)), gamma_pos(1.0 - (1.0 - h) / (2.0 * h0)),
                           gamma_pos(1.0 - (3.0 - 4.0 * h) / (4.0 * h0))});
    } else {
        if (!(h > 0.25)) throw std::domain_error("wave constants need H > 1/4");
        c.c_h1 = std::max({M_PI, gamma_pos(1.0 - 2.0 * h) / h, 2.0 * gamma_pos(2.0 - 4.0 * h) / (4.0 * h - 1.0)});
        c.c_h2 = std::max({gamma_pos(1.0 + 1.0 / (2.0 * h0)), gamma_pos(1.0 + h / h0),
                           gamma_pos(1.0 + (4.0 * h - 1.0) / (2.0 * h0))});
    }
    return c;
}

ConstantsBundle constants_bundle(const NoiseParam& p, Equation eq, double t) {
    ConstantsBundle b;
    const double h0 = p.temporal.h0;
    const TimeConstants tc = riesz_time_constants(h0);
    b.alpha_h0 = tc.alpha_h0;
    b.c_h0 = tc.c_h0;
    b.gamma0_t = gamma0_window(t, h0);
    if (p.is_regular()) {
        const int d = p.regular().dim;
        const double a = p.regular().alpha;
        b.c_d = sphere_area(d);
        const DalangConstant k = dalang_constant(d, a);
        b.k_value = k.value;
        b.k_bound = k.bound;
        b.r_alpha = k.r(eq);
        b.k_alpha_t = heat_k_alpha(t, d, a);
    } else {
        const double h = p.rough().h;
        b.c_d = sphere_area(1);
        b.c_h = riesz_space_constant(h);
        const RoughConstants rc = rough_constants(eq, h, h0);
        b.c_h1 = rc.c_h1;
        b.c_h2 = rc.c_h2;
    }
    return b;
}

}  // namespace anderson
