#pragma once

#include "anderson/model_params.hpp"

#include <Eigen/Dense>

namespace anderson {

// Minimizer of Gamma on (0, inf).
inline constexpr double kGammaArgmin = 1.461632144968362;

// int_{T_n(t)} prod_j (t_{j+1} - t_j)^{beta_j} dt = prod Gamma(beta_j+1) t^{|beta|+n} / Gamma(|beta|+n+1)
double simplex_power_integral(double t, const Eigen::ArrayXd& betas);

// int_R e^{-t xi^2} |xi|^a dxi
double gaussian_freq_moment(double t, double a);

// int_R sin^2(t|xi|) |xi|^{a-2} dxi, a in (-1, 1)
double wave_freq_moment(double t, double a);

// Surface measure of S^{d-1}; 2 for d = 1.
double sphere_area(int d);

struct TimeConstants {
    double alpha_h0;  // H0 (2H0 - 1)
    double c_h0;      // Gamma(2H0+1) sin(pi H0) / (2 pi)
};
TimeConstants riesz_time_constants(double h0);
double riesz_space_constant(double h);

struct DalangConstant {
    double value;   // int (1+|xi|^2)^{-1} |xi|^{-alpha} dxi by radial quadrature
    double bound;   // c_d (1/(d-alpha) + 1/(2-(d-alpha)))
    double r_heat;  // -(d-alpha)/2
    double r_wave;  // 2-(d-alpha)
    double r(Equation eq) const { return eq == Equation::Heat ? r_heat : r_wave; }
};
DalangConstant dalang_constant(int d, double alpha);

// (c_d/2) Gamma((d-alpha)/2) t^{-(d-alpha)/2}
double heat_k_alpha(double t, int d, double alpha);

// int_{-t}^{t} gamma0(s) ds for the fractional kernel
double gamma0_window(double t, double h0);

// Smallest m with m * rate > x0, rate = 1-(d-a)/2 (heat) or 3-d+a (wave).
int tail_threshold(Equation eq, int d, double a);

// k-th term of the dominating series, uniform over alpha in [a, b].
double dominating_term(Equation eq, int d, double a, double b, double t, int k, double gamma0t);

// sum_{k >= m+1} dominating_term(k); throws std::domain_error below the threshold.
double chaos_tail_bound(Equation eq, int d, double a, double b, double t, int m, double gamma0t);

// Gamma0^k K^k Gamma(r+1)^k t^{k(r+1)} / Gamma(k(r+1)+1) for a single alpha.
double moment_bound_term(Equation eq, int d, double alpha, double t, int k, double gamma0t);

struct RoughConstants {
    double c_h1;
    double c_h2;
};
RoughConstants rough_constants(Equation eq, double h, double h0 = 0.75);

struct ConstantsBundle {
    double c_d = 0.0;
    double c_h = 0.0;
    double alpha_h0 = 0.0;
    double c_h0 = 0.0;
    double k_value = 0.0;
    double k_bound = 0.0;
    double r_alpha = 0.0;
    double k_alpha_t = 0.0;
    double c_h1 = 0.0;
    double c_h2 = 0.0;
    double gamma0_t = 0.0;
};
// Fields that do not apply to the regime are left at 0.
ConstantsBundle constants_bundle(const NoiseParam& p, Equation eq, double t);

}  // namespace anderson
