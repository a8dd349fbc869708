#include "anderson/spectral_noise.hpp"

#include "anderson/closed_forms.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace anderson {

Eigen::Index Lattice::xi_cells() const {
    Eigen::Index n = 1;
    for (int i = 0; i < dim; ++i) n *= n_xi;
    return n;
}

Eigen::ArrayXd Lattice::tau_centers() const {
    Eigen::ArrayXd c(n_tau);
    for (int i = 0; i < n_tau; ++i) c[i] = tau_center(i);
    return c;
}

Eigen::ArrayXd Lattice::xi_axis() const {
    Eigen::ArrayXd c(n_xi);
    for (int i = 0; i < n_xi; ++i) c[i] = xi_center(i);
    return c;
}

Eigen::VectorXd Lattice::xi_vector(Eigen::Index xi_cell) const {
    Eigen::VectorXd v(dim);
    for (int a = 0; a < dim; ++a) {
        v[a] = xi_center(static_cast<int>(xi_cell % n_xi));
        xi_cell /= n_xi;
    }
    return v;
}

void check_lattice(const Lattice& l) {
    if (!(l.tau_max > 0.0) || !(l.xi_max > 0.0)) throw std::invalid_argument("lattice extents must be positive");
    if (l.n_tau < 1 || l.n_xi < 1) throw std::invalid_argument("lattice needs at least one cell per axis");
    if (l.dim < 1) throw std::invalid_argument("lattice dimension must be positive");
    if (static_cast<double>(l.n_tau) * std::pow(static_cast<double>(l.n_xi), l.dim) > 4e9)
        throw std::invalid_argument("lattice has too many cells");
}

Lattice default_lattice(double t_horizon, int dim) {
    if (!(t_horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
    Lattice l;
    l.tau_max = 64.0 / t_horizon;
    l.xi_max = 64.0;
    l.n_tau = 256;
    l.n_xi = 256;
    l.dim = dim;
    return l;
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const std::uint64_t p0 = M0 * ctr[0];
        const std::uint64_t p1 = M1 * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

std::array<double, 2> counter_normals(std::uint64_t seed, std::uint64_t counter) {
    const auto x = philox4x32({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), 0u, 0u},
                              {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    auto unit = [](std::uint32_t a, std::uint32_t b) {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1p-53;
    };
    const double u1 = unit(x[0], x[1]);
    const double u2 = unit(x[2], x[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
}

NoiseDraw draw_noise(const Lattice& lattice, std::uint64_t seed, int threads) {
    check_lattice(lattice);
    NoiseDraw d;
    d.seed = seed;
    d.lattice = lattice;
    const Eigen::Index n = lattice.size();
    d.values.resize(n);
    const double half = std::sqrt(lattice.volume() / 2.0);
    const double full = std::sqrt(lattice.volume());
    const Eigen::Index half_n = (n + 1) / 2;
    constexpr Eigen::Index chunk = 4096;
    const auto chunks = static_cast<std::size_t>((half_n + chunk - 1) / chunk);
    parallel_for(chunks, resolve_threads(threads), [&](std::size_t b) {
        const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
        const Eigen::Index hi = std::min(half_n, lo + chunk);
        for (Eigen::Index c = lo; c < hi; ++c) {
            const Eigen::Index m = n - 1 - c;
            const auto z = counter_normals(seed, static_cast<std::uint64_t>(c));
            if (c == m) {
                d.values[c] = z[0] * full;
            } else {
                d.values[c] = cplx(z[0], z[1]) * half;
                d.values[m] = cplx(z[0], -z[1]) * half;
            }
        }
    });
    return d;
}

double tau_weight_sq(const NoiseParam& p, double tau) { return p.temporal.g0(tau); }

double xi_weight_sq(const NoiseParam& p, double r) {
    r = std::abs(r);
    if (p.is_regular()) return std::pow(r, -p.regular().alpha);
    const double h = p.rough().h;
    return riesz_space_constant(h) * std::pow(r, 1.0 - 2.0 * h);
}

double xi_weight_sq(const NoiseParam& p, const Eigen::VectorXd& xi) { return xi_weight_sq(p, xi.norm()); }

double power_cell_mean(double lo, double hi, double e) {
    if (!(hi > lo)) throw std::invalid_argument("empty cell");
    if (!(e > -1.0)) throw std::domain_error("cell power must exceed -1");
    const double e1 = e + 1.0;
    double mass;
    if (lo >= 0.0)
        mass = std::pow(hi, e1) - std::pow(lo, e1);
    else if (hi <= 0.0)
        mass = std::pow(-lo, e1) - std::pow(-hi, e1);
    else
        mass = std::pow(-lo, e1) + std::pow(hi, e1);
    return mass / (e1 * (hi - lo));
}

namespace {

// int_{[0,1]^d} |xi|^e dxi. The corner subcube [0,1/2]^d carries exactly
// 2^{-(d+e)} of the total, so the total is the sum over the other subcubes
// divided by 1 - 2^{-(d+e)}.
double unit_cube_power_integral(int d, double e) {
    const int q = d <= 3 ? 12 : (d <= 5 ? 6 : 3);
    const QuadRule g = gauss_legendre(q);
    const Eigen::ArrayXd x = 0.25 * (g.x + 1.0);
    const Eigen::ArrayXd w = 0.25 * g.w;
    std::vector<int> idx(d);
    double s = 0.0;
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
        std::fill(idx.begin(), idx.end(), 0);
        for (;;) {
            double r2 = 0.0, wt = 1.0;
            for (int a = 0; a < d; ++a) {
                const double c = ((mask >> a) & 1u ? 0.5 : 0.0) + x[idx[a]];
                r2 += c * c;
                wt *= w[idx[a]];
            }
            s += wt * std::pow(r2, e / 2.0);
            int a = 0;
            while (a < d && ++idx[a] == q) idx[a++] = 0;
            if (a == d) break;
        }
    }
    return s / (1.0 - std::pow(2.0, -(d + e)));
}

bool touches_zero(double center, double h) { return std::abs(center) <= 0.5 * h * (1.0 + 1e-12); }

double tau_cell_weight_sq(const NoiseParam& p, double center, double h) {
    if (p.temporal.tabulated() || !touches_zero(center, h)) return tau_weight_sq(p, center);
    const double c = riesz_space_constant(p.temporal.h0);
    return c * power_cell_mean(center - 0.5 * h, center + 0.5 * h, p.tau_exponent());
}

double xi_cell_weight_sq(const NoiseParam& p, const Eigen::VectorXd& center, double h) {
    const int d = static_cast<int>(center.size());
    const double e = p.xi_exponent();
    const double scale = p.is_regular() ? 1.0 : riesz_space_constant(p.rough().h);
    if (d == 1) {
        if (!touches_zero(center[0], h)) return xi_weight_sq(p, center);
        return scale * power_cell_mean(center[0] - 0.5 * h, center[0] + 0.5 * h, e);
    }
    for (int a = 0; a < d; ++a)
        if (!touches_zero(center[a], h)) return xi_weight_sq(p, center);
    // every axis touches 0: either a corner cube [0,h]^d or the centred cube
    const bool centred = center.cwiseAbs().maxCoeff() < 0.25 * h;
    const double side = centred ? 0.5 * h : h;
    const double mass = (centred ? std::pow(2.0, d) : 1.0) * std::pow(side, d + e) * unit_cube_power_integral(d, e);
    return scale * mass / std::pow(h, d);
}

}  // namespace

double spectral_weight(const NoiseParam& p, double tau, const Eigen::VectorXd& xi, std::optional<CellDescriptor> cell) {
    check_structure(p);
    if (p.is_rough() && xi.size() != 1) throw std::invalid_argument("rough noise is one-dimensional");
    if (p.is_regular() && xi.size() != p.regular().dim) throw std::invalid_argument("frequency dimension mismatch");
    if (!cell) return std::sqrt(tau_weight_sq(p, tau) * xi_weight_sq(p, xi));
    const Lattice& l = *cell->lattice;
    return std::sqrt(tau_cell_weight_sq(p, tau, l.d_tau()) * xi_cell_weight_sq(p, xi, l.d_xi()));
}

LatticeWeights lattice_weights(const Lattice& l, const NoiseParam& p) {
    check_lattice(l);
    check_structure(p);
    if (p.dim() != l.dim) throw std::invalid_argument("noise and lattice dimensions differ");
    LatticeWeights w;
    w.tau_w.resize(l.n_tau);
    for (int i = 0; i < l.n_tau; ++i) w.tau_w[i] = std::sqrt(tau_cell_weight_sq(p, l.tau_center(i), l.d_tau()));
    w.xi_w.resize(l.xi_cells());
    for (Eigen::Index c = 0; c < l.xi_cells(); ++c)
        w.xi_w[c] = std::sqrt(xi_cell_weight_sq(p, l.xi_vector(c), l.d_xi()));
    return w;
}

double linear_functional(const NoiseDraw& draw, const NoiseParam& p, const FourierFunctional& fhat) {
    const Lattice& l = draw.lattice;
    const LatticeWeights w = lattice_weights(l, p);
    cplx sum = 0.0;
    double norm = 0.0;
    for (Eigen::Index xc = 0; xc < l.xi_cells(); ++xc) {
        const Eigen::VectorXd xi = l.xi_vector(xc);
        for (int it = 0; it < l.n_tau; ++it) {
            const cplx term = fhat(l.tau_center(it), xi) * w.tau_w[it] * w.xi_w[xc] * draw.values[it + l.n_tau * xc];
            sum += term;
            norm += std::abs(term);
        }
    }
    if (std::abs(sum.imag()) > 1e-9 * std::max(norm, 1e-300))
        throw std::invalid_argument("test function transform is not Hermitian-symmetric");
    return sum.real();
}

double lattice_covariance(const Lattice& l, const NoiseParam& p1, const NoiseParam& p2, const FourierFunctional& fhat) {
    const LatticeWeights w1 = lattice_weights(l, p1);
    const LatticeWeights w2 = lattice_weights(l, p2);
    double s = 0.0;
    for (Eigen::Index xc = 0; xc < l.xi_cells(); ++xc) {
        const Eigen::VectorXd xi = l.xi_vector(xc);
        double row = 0.0;
        for (int it = 0; it < l.n_tau; ++it)
            row += std::norm(fhat(l.tau_center(it), xi)) * w1.tau_w[it] * w2.tau_w[it];
        s += row * w1.xi_w[xc] * w2.xi_w[xc];
    }
    return s * l.volume();
}

cplx box_indicator_fourier(double t, double x, double tau, double xi) {
    return t * phi1(cplx(0.0, -tau * t)) * x * phi1(cplx(0.0, -xi * x));
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& is, int bytes) {
    unsigned char b[8] = {};
    if (!is.read(reinterpret_cast<char*>(b), bytes)) throw std::runtime_error("truncated noise dump");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is, 8)); }

constexpr std::uint32_t kDumpVersion = 1;

}  // namespace

void write_draw(std::ostream& os, const NoiseDraw& draw) {
    const Lattice& l = draw.lattice;
    os.write("ANDC", 4);
    put_u32(os, kDumpVersion);
    put_u64(os, draw.seed);
    put_f64(os, l.tau_max);
    put_f64(os, l.d_tau());
    put_f64(os, l.xi_max);
    put_f64(os, l.d_xi());
    put_f64(os, static_cast<double>(l.dim));
    for (Eigen::Index c = 0; c < draw.values.size(); ++c) {
        put_f64(os, draw.values[c].real());
        put_f64(os, draw.values[c].imag());
    }
}

NoiseDraw read_draw(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "ANDC", 4) != 0) throw std::runtime_error("not a noise dump");
    if (get_u64(is, 4) != kDumpVersion) throw std::runtime_error("unsupported noise dump version");
    NoiseDraw d;
    d.seed = get_u64(is, 8);
    Lattice& l = d.lattice;
    l.tau_max = get_f64(is);
    const double dt = get_f64(is);
    l.xi_max = get_f64(is);
    const double dx = get_f64(is);
    l.dim = static_cast<int>(get_f64(is));
    l.n_tau = static_cast<int>(std::lround(2.0 * l.tau_max / dt));
    l.n_xi = static_cast<int>(std::lround(2.0 * l.xi_max / dx));
    check_lattice(l);
    d.values.resize(l.size());
    for (Eigen::Index c = 0; c < l.size(); ++c) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        d.values[c] = cplx(re, im);
    }
    return d;
}

}  // namespace anderson
