#pragma once

#include "anderson/model_params.hpp"
#include "anderson/numerics.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anderson {

enum class QuadMethod { TensorQuadrature, MCQuadrature };
std::string to_string(QuadMethod m);

struct MomentResult {
    double value = 0.0;
    double error_estimate = 0.0;
    QuadMethod method = QuadMethod::TensorQuadrature;
    bool clipped = false;  // a negative gap within the error bar was set to 0
};

// Raised when the error estimate exceeds the requested tolerance.
struct QuadratureFailure : std::runtime_error {
    MomentResult partial;
    QuadratureFailure(const std::string& what, MomentResult r) : std::runtime_error(what), partial(r) {}
};

struct QuadratureConfig {
    enum class Backend { Auto, Tensor, QMC };
    Backend backend = Backend::Auto;
    // Gauss nodes per panel of the tensor rule; the error estimate compares
    // against the rule with half as many nodes per panel.
    int level = 8;
    // QMC: points per random shift and number of shifts.
    std::size_t qmc_points = 1 << 15;
    int qmc_shifts = 16;
    std::uint64_t qmc_seed = 20240601;
    // relative tolerance on error_estimate / |value|; 0 disables the check
    double tolerance = 0.0;
    int threads = 0;
};

struct MultiIndexSet {
    int k = 0;
    std::vector<Eigen::VectorXi> indices;
};

// Exponent vectors of the expansion of prod_j (|eta_j|^s + |eta_{j-1}|^s), eta_0 = 0.
MultiIndexSet multiindex_set(int k);

struct ProductBound {
    double lhs;
    double rhs;
};
ProductBound product_bound_check(const Eigen::VectorXd& etas, double h);

MomentResult chaos_moment(const NoiseParam& p, Equation eq, double t, const Eigen::VectorXd& x, int k,
                          const QuadratureConfig& cfg = {});
MomentResult chaos_cross_moment(const NoiseParam& p1, const NoiseParam& p2, Equation eq, double t,
                                const Eigen::VectorXd& x, int k, const QuadratureConfig& cfg = {});
// E|I_k^{p_n} - I_k^{p*}|^2
MomentResult continuity_gap(const NoiseParam& p_n, const NoiseParam& p_star, Equation eq, double t,
                            const Eigen::VectorXd& x, int k, const QuadratureConfig& cfg = {});

// One pass over the quadrature nodes for a family of parameters sharing the
// temporal kernel: moments of every theta, and the cross moment and gap of
// every theta against thetas[target].
struct MomentSweep {
    std::vector<MomentResult> moment;
    std::vector<MomentResult> cross;
    std::vector<MomentResult> gap;
};
MomentSweep moment_sweep(const std::vector<NoiseParam>& thetas, std::size_t target, Equation eq, double t, int k,
                         const QuadratureConfig& cfg = {});

// Nonnegative test function on [0, support]^k.
struct TestFunction {
    std::function<double(const double*)> f;
    double support = 1.0;
};

// max over the samples of alpha_H0^k int int prod |t_j - s_j|^{2H0-2} phi(t) phi(s)
// divided by (int phi^{1/H0})^{2H0}; k <= 2.
double lh_ratio(double h0, int k, const std::vector<TestFunction>& samples);

}  // namespace anderson
