#pragma once

#include "anderson/model_params.hpp"
#include "anderson/numerics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

namespace anderson {

// Spatial Fourier transform of the fundamental solution, F G_t(xi), zero for t < 0.
template <typename Scalar>
Scalar green_fourier(Equation eq, Scalar t, Scalar xi_norm) {
    using std::abs;
    using std::exp;
    using std::sin;
    if (t < Scalar(0)) return Scalar(0);
    const Scalar r = abs(xi_norm);
    if (eq == Equation::Heat) return exp(-t * r * r / Scalar(2));
    const Scalar tr = t * r;
    if (tr < Scalar(1e-4)) return t * (Scalar(1) - tr * tr / Scalar(6));
    return sin(tr) / r;
}

// Heat: Gaussian density in any d. Wave: d = 1, 2 only.
double green_physical(Equation eq, int d, double t, const Eigen::VectorXd& x);

struct OrderedTimes {
    std::vector<double> times;
    double horizon = 1.0;
};

// e^{-i(xi_1+..+xi_k).x} prod_j FG_{t_{j+1}-t_j}(xi_1+..+xi_j), t_{k+1} = t.
cplx chaos_kernel_fourier(Equation eq, double t, const Eigen::VectorXd& x, const OrderedTimes& times,
                          const std::vector<Eigen::VectorXd>& xis);

// (1/k!) sum over permutations; times need not be ordered. k <= 6.
cplx symmetrized_kernel_fourier(Equation eq, double t, const Eigen::VectorXd& x, const std::vector<double>& times,
                                const std::vector<Eigen::VectorXd>& xis);

// Divided difference of z -> e^{z t} at the given nodes (repeats allowed).
cplx exp_divided_difference(std::span<const cplx> nodes, double t);

// Nodes whose divided difference gives the time-Fourier transform of the
// chaos kernel: gap 0 carries -i S_0, gap j carries -i S_j plus the Green
// factor (one node for heat, two for wave), S_j = tau_{j+1} + .. + tau_k.
// `eta` are the partial frequency sums |xi_1 + .. + xi_j|.
int kernel_nodes(Equation eq, const double* tau, const double* eta_norm, int k, cplx* out);

// Full space-time Fourier transform of f_{t,x,k} at (tau_j, xi_j):
// int_{T_k(t)} e^{-i sum tau_j t_j} phi_xi(t_1..t_k) dt.
cplx time_fourier_kernel(Equation eq, double t, const Eigen::VectorXd& x, std::span<const double> taus,
                         const std::vector<Eigen::VectorXd>& xis);

// Same for d = 1 with raw arrays; used in inner loops.
cplx time_fourier_kernel_1d(Equation eq, double t, double x, const double* tau, const double* xi, int k);

}  // namespace anderson
