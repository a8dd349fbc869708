#pragma once

#include "anderson/model_params.hpp"
#include "anderson/numerics.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>

namespace anderson {

// Uniform cells on [-tau_max, tau_max] x [-xi_max, xi_max]^dim. Cell i on an
// axis with n cells and spacing h is centred at (i - (n-1)/2) h. The linear
// index runs tau fastest, then xi_1, .., xi_dim; the mirror (-tau, -xi) of
// index c is size() - 1 - c.
struct Lattice {
    double tau_max = 64.0;
    double xi_max = 64.0;
    int n_tau = 256;
    int n_xi = 256;
    int dim = 1;

    double d_tau() const { return 2.0 * tau_max / n_tau; }
    double d_xi() const { return 2.0 * xi_max / n_xi; }
    double volume() const { return d_tau() * std::pow(d_xi(), dim); }
    Eigen::Index xi_cells() const;
    Eigen::Index size() const { return xi_cells() * n_tau; }
    Eigen::Index mirror(Eigen::Index c) const { return size() - 1 - c; }
    double tau_center(int i) const { return (i - 0.5 * (n_tau - 1)) * d_tau(); }
    double xi_center(int i) const { return (i - 0.5 * (n_xi - 1)) * d_xi(); }
    // tau centres and per-axis xi centres
    Eigen::ArrayXd tau_centers() const;
    Eigen::ArrayXd xi_axis() const;
    // xi cell -> vector centre
    Eigen::VectorXd xi_vector(Eigen::Index xi_cell) const;
};

// Throws std::invalid_argument on a malformed lattice.
void check_lattice(const Lattice& l);

// tau_max = 64 / t_horizon, xi_max = 64, 256 cells per axis.
Lattice default_lattice(double t_horizon, int dim = 1);

struct NoiseDraw {
    std::uint64_t seed = 0;
    Lattice lattice;
    Eigen::VectorXcd values;  // one entry per cell, linear index order

    // values viewed as n_tau x xi_cells
    Eigen::Map<const Eigen::MatrixXcd> grid() const {
        return {values.data(), lattice.n_tau, lattice.xi_cells()};
    }
};

// Counter-based Philox 4x32-10.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

// Two standard normals determined by (seed, counter).
std::array<double, 2> counter_normals(std::uint64_t seed, std::uint64_t counter);

NoiseDraw draw_noise(const Lattice& lattice, std::uint64_t seed, int threads = 1);

// Separable squared weight w^2 = tau part x xi part.
double tau_weight_sq(const NoiseParam& p, double tau);
double xi_weight_sq(const NoiseParam& p, const Eigen::VectorXd& xi);
double xi_weight_sq(const NoiseParam& p, double xi_norm);

// Average of the power |s|^e over [lo, hi] (0 inside or at the edge allowed), e > -1.
double power_cell_mean(double lo, double hi, double e);

struct CellDescriptor {
    Eigen::Index tau_index;
    Eigen::Index xi_cell;
    const Lattice* lattice;
};

// Pointwise weight; with a cell, cells touching tau = 0 or xi = 0 use the
// root-mean-square of w over the cell.
double spectral_weight(const NoiseParam& p, double tau, const Eigen::VectorXd& xi,
                       std::optional<CellDescriptor> cell = std::nullopt);

// Per-axis factors of the cell weights: w(c) = tau_w[i_tau] * xi_w[xi_cell].
struct LatticeWeights {
    Eigen::ArrayXd tau_w;
    Eigen::ArrayXd xi_w;
};
LatticeWeights lattice_weights(const Lattice& l, const NoiseParam& p);

using FourierFunctional = std::function<cplx(double tau, const Eigen::VectorXd& xi)>;

// Sum over cells of F(c) w(c) value(c); throws if the imaginary residual is
// not negligible.
double linear_functional(const NoiseDraw& draw, const NoiseParam& p, const FourierFunctional& fhat);

// sum_c |F(c)|^2 w1(c) w2(c) vol: the exact lattice covariance of two functionals.
double lattice_covariance(const Lattice& l, const NoiseParam& p1, const NoiseParam& p2, const FourierFunctional& fhat);

// F of 1_{[0,t] x [0,x]} (d = 1) under int e^{-i tau s - i xi y} f(s, y) ds dy.
cplx box_indicator_fourier(double t, double x, double tau, double xi);

void write_draw(std::ostream& os, const NoiseDraw& draw);
NoiseDraw read_draw(std::istream& is);

}  // namespace anderson
