#include "anderson/monte_carlo.hpp"

#include "anderson/kernels.hpp"
#include "anderson/numerics.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace anderson {

namespace {

// Node pairs closer than this (times the horizon) are evaluated by the
// divided difference instead of partial fractions.
constexpr double kResonance = 0.5;

bool same_temporal(const TemporalKernel& a, const TemporalKernel& b) {
    return a.h0 == b.h0 && a.table_tau == b.table_tau && a.table_g0 == b.table_g0;
}

bool same_lattice(const Lattice& a, const Lattice& b) {
    return a.tau_max == b.tau_max && a.xi_max == b.xi_max && a.n_tau == b.n_tau && a.n_xi == b.n_xi &&
           a.dim == b.dim;
}

double tuple_count(Eigen::Index cells, int k) { return std::pow(static_cast<double>(cells), k); }

// Chebyshev-Lobatto nodes on [0, T] and their barycentric weights.
void lobatto(int n, double T, Eigen::ArrayXd& s, Eigen::ArrayXd& bw) {
    s.resize(n);
    bw.resize(n);
    for (int m = 0; m < n; ++m) {
        s[m] = 0.5 * T * (1.0 - std::cos(M_PI * m / (n - 1)));
        bw[m] = (m % 2 == 0 ? 1.0 : -1.0) * ((m == 0 || m == n - 1) ? 0.5 : 1.0);
    }
}

// Lagrange basis values at y.
void lagrange_row(const Eigen::ArrayXd& s, const Eigen::ArrayXd& bw, double y, double* out) {
    const Eigen::Index n = s.size();
    for (Eigen::Index m = 0; m < n; ++m) {
        if (y == s[m]) {
            for (Eigen::Index j = 0; j < n; ++j) out[j] = j == m ? 1.0 : 0.0;
            return;
        }
    }
    double den = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        out[m] = bw[m] / (y - s[m]);
        den += out[m];
    }
    for (Eigen::Index m = 0; m < n; ++m) out[m] /= den;
}

}  // namespace

struct ChaosSampler::Impl {
    Lattice lat;
    std::vector<NoiseParam> thetas;
    Equation eq = Equation::Heat;
    std::vector<SpaceTimePoint> points;
    int m = 0;
    SamplerConfig cfg;

    Eigen::Index n_tau = 0, n_x = 0, cells = 0;
    Eigen::ArrayXd taus;
    std::vector<Eigen::VectorXd> xis;
    Eigen::ArrayXd tau_w;
    std::vector<Eigen::ArrayXd> xi_w;

    std::vector<double> group_t;
    std::vector<int> point_group;
    Eigen::MatrixXcd phase;  // e^{-i xi.x}, xi cells x points

    std::vector<Eigen::MatrixXcd> k1;  // per time group, n_tau x n_x

    bool fast = false;
    // direct sums, per point
    std::vector<Eigen::MatrixXcd> k2;
    std::vector<std::vector<cplx>> k3;

    // factorized second order (d = 1)
    int ns = 0;
    Eigen::Index n_eta = 0, fft_len = 0;
    Eigen::MatrixXcd tphase;                  // e^{-i tau s_m}, ns x n_tau
    Eigen::MatrixXcd coef;                    // n_tau x n_x
    std::vector<Eigen::MatrixXcd> green_coef;  // n_tau x n_x
    std::vector<Eigen::MatrixXcd> green_exp;   // ns x n_x
    struct Resonant {
        Eigen::Index it, jx;
        Eigen::VectorXcd values;  // E(s_m) for this cell
    };
    std::vector<Resonant> resonant;
    std::vector<Eigen::MatrixXd> wgt;  // per group, n_eta x ns
    std::vector<Eigen::MatrixXcd> k_same, k_mirror;
    Eigen::MatrixXcd eta_phase;   // n_eta x points
    Eigen::MatrixXcd same_phase;  // n_x x points

    cplx kernel(double t, const double* tau, const Eigen::Index* xc, int k) const {
        if (lat.dim == 1) {
            std::array<double, 3> xi;
            for (int j = 0; j < k; ++j) xi[j] = xis[xc[j]][0];
            return time_fourier_kernel_1d(eq, t, 0.0, tau, xi.data(), k);
        }
        std::vector<Eigen::VectorXd> v(k);
        for (int j = 0; j < k; ++j) v[j] = xis[xc[j]];
        return time_fourier_kernel(eq, t, Eigen::VectorXd::Zero(lat.dim), std::span<const double>(tau, k), v);
    }

    void setup();
    void setup_direct(int k, int threads);
    void setup_fast(int threads);
    void sample(const NoiseDraw& draw, std::vector<double>& out) const;
    void sample_fast(const Eigen::MatrixXcd& B, std::vector<double>& out) const;
};

void ChaosSampler::Impl::setup() {
    check_lattice(lat);
    if (m < 0 || m > 3) throw std::invalid_argument("truncation order must lie in 0..3, got " + std::to_string(m));
    if (thetas.empty()) throw std::invalid_argument("no noise parameters given");
    if (points.empty()) throw std::invalid_argument("no evaluation points given");
    for (const auto& p : thetas) {
        check_structure(p);
        if (p.dim() != lat.dim) throw std::invalid_argument("noise and lattice dimensions differ");
        if (!same_family(p, thetas.front()) || !same_temporal(p.temporal, thetas.front().temporal))
            throw std::invalid_argument("coupled parameters must share the regime family and temporal kernel");
    }
    for (const auto& pt : points) {
        if (!(pt.t > 0.0)) throw std::invalid_argument("evaluation times must be positive");
        if (pt.x.size() != lat.dim) throw std::invalid_argument("evaluation point has the wrong dimension");
    }
    const int threads = resolve_threads(cfg.threads);
    n_tau = lat.n_tau;
    n_x = lat.xi_cells();
    cells = lat.size();
    taus = lat.tau_centers();
    xis.resize(n_x);
    for (Eigen::Index c = 0; c < n_x; ++c) xis[c] = lat.xi_vector(c);
    tau_w = lattice_weights(lat, thetas.front()).tau_w;
    for (const auto& p : thetas) xi_w.push_back(lattice_weights(lat, p).xi_w);

    point_group.resize(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        auto it = std::find(group_t.begin(), group_t.end(), points[p].t);
        if (it == group_t.end()) {
            group_t.push_back(points[p].t);
            it = group_t.end() - 1;
        }
        point_group[p] = static_cast<int>(it - group_t.begin());
    }
    phase.resize(n_x, static_cast<Eigen::Index>(points.size()));
    for (std::size_t p = 0; p < points.size(); ++p)
        for (Eigen::Index c = 0; c < n_x; ++c) phase(c, p) = std::polar(1.0, -xis[c].dot(points[p].x));
    if (m == 0) return;

    k1.assign(group_t.size(), Eigen::MatrixXcd(n_tau, n_x));
    for (std::size_t g = 0; g < group_t.size(); ++g) {
        parallel_for(static_cast<std::size_t>(n_x), threads, [&](std::size_t jx) {
            const auto xc = static_cast<Eigen::Index>(jx);
            for (Eigen::Index it = 0; it < n_tau; ++it) k1[g](it, xc) = kernel(group_t[g], &taus[it], &xc, 1);
        });
    }
    if (m >= 2) {
        fast = lat.dim == 1 && cfg.allow_fast;
        if (fast)
            setup_fast(threads);
        else
            setup_direct(2, threads);
    }
    if (m >= 3) setup_direct(3, threads);
}

void ChaosSampler::Impl::setup_direct(int k, int threads) {
    const double count = tuple_count(cells, k);
    if (count > cfg.tuple_budget)
        throw std::invalid_argument("order " + std::to_string(k) + " needs " + format_double(count) +
                                    " cell tuples on this lattice; the budget is " + format_double(cfg.tuple_budget));
    const Eigen::Index N = cells;
    auto tau_of = [&](Eigen::Index c) { return taus[c % n_tau]; };
    auto xc_of = [&](Eigen::Index c) { return c / n_tau; };
    // cells sharing a {c, mirror(c)} pair are one degree of freedom
    auto clash = [&](Eigen::Index a, Eigen::Index b) { return a == b || a == lat.mirror(b); };
    if (k == 2) {
        k2.assign(points.size(), Eigen::MatrixXcd(N, N));
        for (std::size_t p = 0; p < points.size(); ++p) {
            const double t = points[p].t;
            parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t ai) {
                const auto a = static_cast<Eigen::Index>(ai);
                for (Eigen::Index b = 0; b < N; ++b) {
                    if (clash(a, b)) {
                        k2[p](a, b) = 0.0;
                        continue;
                    }
                    const double tau[2] = {tau_of(a), tau_of(b)};
                    const Eigen::Index xc[2] = {xc_of(a), xc_of(b)};
                    k2[p](a, b) = kernel(t, tau, xc, 2) * phase(xc[0], p) * phase(xc[1], p);
                }
            });
        }
        return;
    }
    k3.assign(points.size(), std::vector<cplx>(static_cast<std::size_t>(N * N * N)));
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double t = points[p].t;
        parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t ai) {
            const auto a = static_cast<Eigen::Index>(ai);
            cplx* row = k3[p].data() + a * N * N;
            for (Eigen::Index b = 0; b < N; ++b)
                for (Eigen::Index c = 0; c < N; ++c) {
                    cplx& out = row[b * N + c];
                    if (clash(a, b) || clash(a, c) || clash(b, c)) {
                        out = 0.0;
                        continue;
                    }
                    const double tau[3] = {tau_of(a), tau_of(b), tau_of(c)};
                    const Eigen::Index xc[3] = {xc_of(a), xc_of(b), xc_of(c)};
                    out = kernel(t, tau, xc, 3) * phase(xc[0], p) * phase(xc[1], p) * phase(xc[2], p);
                }
        });
    }
}

// Second order on a d = 1 lattice. With E(s; c) the first-order kernel at
// horizon s, the full double sum is
//   sum_eta e^{-i eta x} int_0^t FG_{t-s}(eta) V(s, eta) ds,
//   V(s, eta) = sum_{xi1 + xi2 = eta} M(s, xi1) N(s, xi2),
// M(s, xi) = sum_tau w B E(s; tau, xi), N(s, xi) = sum_tau w B e^{-i tau s}.
// M and N are sampled at Chebyshev nodes in s (a GEMM plus partial-fraction
// Green terms), V is a convolution in xi done by FFT, and the s-integral uses
// precomputed weights against the Lagrange basis. Diagonal tuples are
// subtracted afterwards.
void ChaosSampler::Impl::setup_fast(int threads) {
    const double T = *std::max_element(group_t.begin(), group_t.end());
    const double h = lat.d_xi();
    const double xi_top = 0.5 * (lat.n_xi - 1) * h;
    const double tau_top = 0.5 * (lat.n_tau - 1) * lat.d_tau();
    const double band = eq == Equation::Heat ? 2.0 * tau_top : tau_top + std::max(tau_top, xi_top);
    ns = cfg.time_nodes > 0 ? cfg.time_nodes : static_cast<int>(std::ceil(band * T / 2.0)) + 40;
    if (ns < 4) ns = 4;
    Eigen::ArrayXd s, bw;
    lobatto(ns, T, s, bw);

    tphase.resize(ns, n_tau);
    for (int mm = 0; mm < ns; ++mm)
        for (Eigen::Index it = 0; it < n_tau; ++it) tphase(mm, it) = std::polar(1.0, -taus[it] * s[mm]);

    const Eigen::Index j0 = n_x / 2;
    const int ng = eq == Equation::Heat ? 1 : 2;
    coef = Eigen::MatrixXcd::Zero(n_tau, n_x);
    green_coef.assign(ng, Eigen::MatrixXcd::Zero(n_tau, n_x));
    green_exp.assign(ng, Eigen::MatrixXcd(ns, n_x));
    std::vector<std::vector<Resonant>> res_cols(n_x);
    parallel_for(static_cast<std::size_t>(n_x), threads, [&](std::size_t jxs) {
        const auto jx = static_cast<Eigen::Index>(jxs);
        const double r = std::abs(xis[jx][0]);
        std::array<cplx, 3> z;
        const double zero = 0.0;
        kernel_nodes(eq, &zero, &r, 1, z.data());
        for (int g = 0; g < ng; ++g)
            for (int mm = 0; mm < ns; ++mm) green_exp[g](mm, jx) = std::exp(z[g + 1] * s[mm]);
        for (Eigen::Index it = 0; it < n_tau; ++it) {
            const int n = kernel_nodes(eq, &taus[it], &r, 1, z.data());
            double dmin = std::numeric_limits<double>::infinity();
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) dmin = std::min(dmin, std::abs(z[a] - z[b]));
            if (dmin * T < kResonance) {
                if (jx < j0) continue;
                Resonant rc{it, jx, Eigen::VectorXcd(ns)};
                for (int mm = 0; mm < ns; ++mm)
                    rc.values[mm] = s[mm] == 0.0 ? cplx(0.0) : exp_divided_difference(std::span<const cplx>(z.data(), n), s[mm]);
                res_cols[jx].push_back(std::move(rc));
                continue;
            }
            for (int a = 0; a < n; ++a) {
                cplx den = 1.0;
                for (int b = 0; b < n; ++b)
                    if (b != a) den *= z[a] - z[b];
                if (a == 0)
                    coef(it, jx) = 1.0 / den;
                else
                    green_coef[a - 1](it, jx) = 1.0 / den;
            }
        }
    });
    for (auto& col : res_cols)
        for (auto& rc : col) resonant.push_back(std::move(rc));

    // second-order diagonal kernels without the spatial phase
    k_same.assign(group_t.size(), Eigen::MatrixXcd(n_tau, n_x));
    k_mirror.assign(group_t.size(), Eigen::MatrixXcd(n_tau, n_x));
    for (std::size_t g = 0; g < group_t.size(); ++g) {
        parallel_for(static_cast<std::size_t>(n_x), threads, [&](std::size_t jxs) {
            const auto jx = static_cast<Eigen::Index>(jxs);
            const Eigen::Index mx = n_x - 1 - jx;
            for (Eigen::Index it = 0; it < n_tau; ++it) {
                const Eigen::Index mt = n_tau - 1 - it;
                const double ts[2] = {taus[it], taus[it]};
                const Eigen::Index xs[2] = {jx, jx};
                k_same[g](it, jx) = kernel(group_t[g], ts, xs, 2);
                if (mt == it && mx == jx) {
                    k_mirror[g](it, jx) = 0.0;  // already counted as (c, c)
                    continue;
                }
                const double tm[2] = {taus[it], taus[mt]};
                const Eigen::Index xm[2] = {jx, mx};
                k_mirror[g](it, jx) = kernel(group_t[g], tm, xm, 2);
            }
        });
    }

    // s-integration weights: W(q, m) = int_0^t FG_{t-s}(eta_q) l_m(s) ds
    n_eta = 2 * n_x - 1;
    fft_len = 1;
    while (fft_len < n_eta) fft_len *= 2;
    Eigen::ArrayXd eta(n_eta);
    for (Eigen::Index q = 0; q < n_eta; ++q) eta[q] = (q - (n_x - 1)) * h;
    const double eta_top = (n_x - 1) * h;
    const QuadRule gl = gauss_legendre(10);
    wgt.resize(group_t.size());
    for (std::size_t g = 0; g < group_t.size(); ++g) {
        const double t = group_t[g];
        std::vector<double> br = {0.0, t};
        for (int mm = 0; mm < ns; ++mm)
            if (s[mm] > 0.0 && s[mm] < t) br.push_back(s[mm]);
        for (int l = 1; l <= 40; ++l) br.push_back(t - t * std::ldexp(1.0, -l));
        const double du = std::min(T / 16.0, 2.0 / std::max(eta_top, 1e-300));
        for (double u = du; u < t; u += du) br.push_back(u);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        const Eigen::Index nq = static_cast<Eigen::Index>(br.size() - 1) * gl.size();
        Eigen::MatrixXd F(n_eta, nq), L(nq, ns);
        Eigen::Index col = 0;
        for (std::size_t i = 0; i + 1 < br.size(); ++i) {
            const double a = br[i], b = br[i + 1];
            for (Eigen::Index j = 0; j < gl.size(); ++j, ++col) {
                const double y = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[j];
                const double wq = 0.5 * (b - a) * gl.w[j];
                for (Eigen::Index q = 0; q < n_eta; ++q) F(q, col) = wq * green_fourier(eq, t - y, eta[q]);
                Eigen::RowVectorXd row(ns);
                lagrange_row(s, bw, y, row.data());
                L.row(col) = row;
            }
        }
        wgt[g] = F * L;
    }
    eta_phase.resize(n_eta, static_cast<Eigen::Index>(points.size()));
    same_phase.resize(n_x, static_cast<Eigen::Index>(points.size()));
    for (std::size_t p = 0; p < points.size(); ++p) {
        const double x = points[p].x[0];
        for (Eigen::Index q = 0; q < n_eta; ++q) eta_phase(q, p) = std::polar(1.0, -eta[q] * x);
        for (Eigen::Index j = 0; j < n_x; ++j) same_phase(j, p) = std::polar(1.0, -2.0 * xis[j][0] * x);
    }
}

void ChaosSampler::Impl::sample(const NoiseDraw& draw, std::vector<double>& out) const {
    if (!same_lattice(draw.lattice, lat)) throw std::invalid_argument("noise draw lives on a different lattice");
    if (draw.values.size() != cells) throw std::invalid_argument("noise draw has the wrong size");
    const std::size_t nth = thetas.size(), np = points.size();
    out.assign(static_cast<std::size_t>(m) * nth * np, 0.0);
    if (m == 0) return;
    const auto at = [&](int k, std::size_t th, std::size_t p) -> double& {
        return out[(static_cast<std::size_t>(k - 1) * nth + th) * np + p];
    };

    Eigen::MatrixXcd B = draw.grid();
    B.array().colwise() *= tau_w.cast<cplx>();

    std::vector<Eigen::VectorXcd> s1(group_t.size());
    for (std::size_t g = 0; g < group_t.size(); ++g)
        s1[g] = (k1[g].array() * B.array()).colwise().sum().transpose();
    for (std::size_t th = 0; th < nth; ++th)
        for (std::size_t p = 0; p < np; ++p)
            at(1, th, p) = (xi_w[th].cast<cplx>() * phase.col(p).array() * s1[point_group[p]].array()).sum().real();

    if (m >= 2 && fast) sample_fast(B, out);

    if ((m >= 2 && !fast) || m >= 3) {
        for (std::size_t th = 0; th < nth; ++th) {
            Eigen::VectorXcd v(cells);
            for (Eigen::Index jx = 0; jx < n_x; ++jx) v.segment(jx * n_tau, n_tau) = B.col(jx) * xi_w[th][jx];
            for (std::size_t p = 0; p < np; ++p) {
                if (!fast) at(2, th, p) = (v.transpose() * (k2[p] * v))(0, 0).real();
                if (m < 3) continue;
                const Eigen::Index N = cells;
                const cplx* K = k3[p].data();
                cplx acc = 0.0;
                for (Eigen::Index a = 0; a < N; ++a) {
                    cplx ra = 0.0;
                    for (Eigen::Index b = 0; b < N; ++b) {
                        const cplx* row = K + (a * N + b) * N;
                        cplx rb = 0.0;
                        for (Eigen::Index c = 0; c < N; ++c) rb += row[c] * v[c];
                        ra += rb * v[b];
                    }
                    acc += ra * v[a];
                }
                at(3, th, p) = acc.real();
            }
        }
    }
}

void ChaosSampler::Impl::sample_fast(const Eigen::MatrixXcd& B, std::vector<double>& out) const {
    const std::size_t nth = thetas.size(), np = points.size();
    const Eigen::Index j0 = n_x / 2, nh = n_x - j0;
    const auto Bh = B.rightCols(nh);

    Eigen::MatrixXcd N0(ns, n_x), M0(ns, n_x);
    N0.rightCols(nh).noalias() = tphase * Bh;
    M0.rightCols(nh).noalias() = tphase * (Bh.array() * coef.rightCols(nh).array()).matrix();
    for (std::size_t g = 0; g < green_coef.size(); ++g) {
        const Eigen::RowVectorXcd cg = (Bh.array() * green_coef[g].rightCols(nh).array()).colwise().sum();
        M0.rightCols(nh).array() += green_exp[g].rightCols(nh).array().rowwise() * cg.array();
    }
    for (const auto& rc : resonant) M0.col(rc.jx) += B(rc.it, rc.jx) * rc.values;
    for (Eigen::Index j = 0; j < j0; ++j) {
        N0.col(j) = N0.col(n_x - 1 - j).conjugate();
        M0.col(j) = M0.col(n_x - 1 - j).conjugate();
    }

    std::vector<Eigen::VectorXcd> dsame(group_t.size()), dmir(group_t.size());
    const Eigen::ArrayXXcd B2 = B.array().square();
    const Eigen::ArrayXXcd Babs = B.array().abs2().cast<cplx>();
    for (std::size_t g = 0; g < group_t.size(); ++g) {
        dsame[g] = (k_same[g].array() * B2).colwise().sum().transpose();
        dmir[g] = (k_mirror[g].array() * Babs).colwise().sum().transpose();
    }

    Eigen::FFT<double> fft;
    std::vector<cplx> a(fft_len), b(fft_len), fa, fb, c;
    Eigen::MatrixXcd V(n_eta, ns);
    for (std::size_t th = 0; th < nth; ++th) {
        const Eigen::ArrayXd& w = xi_w[th];
        for (int mm = 0; mm < ns; ++mm) {
            std::fill(a.begin(), a.end(), cplx(0.0));
            std::fill(b.begin(), b.end(), cplx(0.0));
            for (Eigen::Index j = 0; j < n_x; ++j) {
                a[j] = M0(mm, j) * w[j];
                b[j] = N0(mm, j) * w[j];
            }
            fft.fwd(fa, a);
            fft.fwd(fb, b);
            for (Eigen::Index q = 0; q < fft_len; ++q) fa[q] *= fb[q];
            fft.inv(c, fa);
            for (Eigen::Index q = 0; q < n_eta; ++q) V(q, mm) = c[q];
        }
        const Eigen::ArrayXd w2 = w.square();
        for (std::size_t g = 0; g < group_t.size(); ++g) {
            const Eigen::VectorXcd Y = (wgt[g].cast<cplx>().array() * V.array()).rowwise().sum();
            for (std::size_t p = 0; p < np; ++p) {
                if (point_group[p] != static_cast<int>(g)) continue;
                const cplx full = (eta_phase.col(p).array() * Y.array()).sum();
                const cplx diag =
                    (w2.cast<cplx>() * (same_phase.col(p).array() * dsame[g].array() + dmir[g].array())).sum();
                out[(nth + th) * np + p] = (full - diag).real();
            }
        }
    }
}

ChaosSampler::ChaosSampler(const Lattice& lattice, std::vector<NoiseParam> thetas, Equation eq,
                           std::vector<SpaceTimePoint> points, int m, const SamplerConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
    impl_->lat = lattice;
    impl_->thetas = std::move(thetas);
    impl_->eq = eq;
    impl_->points = std::move(points);
    impl_->m = m;
    impl_->cfg = cfg;
    impl_->setup();
}

ChaosSampler::~ChaosSampler() = default;
ChaosSampler::ChaosSampler(ChaosSampler&&) noexcept = default;
ChaosSampler& ChaosSampler::operator=(ChaosSampler&&) noexcept = default;

void ChaosSampler::sample(const NoiseDraw& draw, std::vector<double>& out) const { impl_->sample(draw, out); }
int ChaosSampler::order() const { return impl_->m; }
std::size_t ChaosSampler::theta_count() const { return impl_->thetas.size(); }
std::size_t ChaosSampler::point_count() const { return impl_->points.size(); }
bool ChaosSampler::factorized() const { return impl_->fast; }

double discrete_multiple_integral(const NoiseDraw& draw, const NoiseParam& p, Equation eq, double t,
                                  const Eigen::VectorXd& x, int k, const SamplerConfig& cfg) {
    if (k < 0 || k > 3) throw std::invalid_argument("discrete chaos order must lie in 0..3");
    if (k == 0) return 1.0;
    ChaosSampler s(draw.lattice, {p}, eq, {SpaceTimePoint{t, x}}, k, cfg);
    std::vector<double> out;
    s.sample(draw, out);
    return out[static_cast<std::size_t>(k - 1)];
}

double truncated_solution(const NoiseDraw& draw, const NoiseParam& p, Equation eq, double t, const Eigen::VectorXd& x,
                          int m, const SamplerConfig& cfg) {
    ChaosSampler s(draw.lattice, {p}, eq, {SpaceTimePoint{t, x}}, m, cfg);
    std::vector<double> out;
    s.sample(draw, out);
    double u = 1.0;
    for (double v : out) u += v;
    return u;
}

EnsembleTable coupled_ensemble(const std::vector<std::uint64_t>& seeds, const std::vector<NoiseParam>& thetas,
                               Equation eq, const std::vector<SpaceTimePoint>& points, int m, const Lattice& lattice,
                               const SamplerConfig& cfg) {
    if (seeds.empty()) throw std::invalid_argument("no seeds given");
    for (const auto& p : thetas) require_admissible(p, eq);
    const ChaosSampler sampler(lattice, thetas, eq, points, m, cfg);
    EnsembleTable tab;
    tab.thetas = thetas;
    tab.points = points;
    tab.m = m;
    tab.seeds = seeds;
    const std::size_t per_seed = thetas.size() * points.size();
    tab.samples.assign(seeds.size() * per_seed, 1.0);
    tab.chaos.assign(static_cast<std::size_t>(m) * tab.samples.size(), 0.0);
    if (m == 0) return tab;
    parallel_for(seeds.size(), resolve_threads(cfg.threads), [&](std::size_t si) {
        const NoiseDraw draw = draw_noise(lattice, seeds[si], 1);
        std::vector<double> out;
        sampler.sample(draw, out);
        for (std::size_t j = 0; j < per_seed; ++j) {
            double u = 1.0;
            for (int k = 1; k <= m; ++k) {
                const double v = out[static_cast<std::size_t>(k - 1) * per_seed + j];
                tab.chaos[static_cast<std::size_t>(k - 1) * tab.samples.size() + si * per_seed + j] = v;
                u += v;
            }
            tab.samples[si * per_seed + j] = u;
        }
    });
    return tab;
}

std::vector<IncrementStat> increment_moments(const EnsembleTable& table, Direction dir, double p, std::size_t theta) {
    if (!(p >= 2.0)) throw std::domain_error("increment moment order must be at least 2");
    if (theta >= table.thetas.size()) throw std::out_of_range("theta index out of range");
    const auto& pts = table.points;
    const std::size_t n = pts.size();
    if (n < 2) throw std::invalid_argument("increment moments need at least 2 points along the transect");
    if (table.seeds.empty()) throw std::invalid_argument("empty ensemble");
    double unit;
    if (dir == Direction::Time) {
        const double dt = pts[1].t - pts[0].t;
        if (!(dt > 0.0)) throw std::invalid_argument("time transect must be increasing");
        for (std::size_t i = 0; i < n; ++i) {
            if (pts[i].x != pts[0].x) throw std::invalid_argument("time transect needs a fixed x");
            if (std::abs(pts[i].t - pts[0].t - i * dt) > 1e-9 * (std::abs(pts[0].t) + n * dt))
                throw std::invalid_argument("time transect is not regular");
        }
        unit = dt;
    } else {
        const Eigen::VectorXd dx = pts[1].x - pts[0].x;
        if (!(dx.norm() > 0.0)) throw std::invalid_argument("space transect needs distinct points");
        for (std::size_t i = 0; i < n; ++i) {
            if (pts[i].t != pts[0].t) throw std::invalid_argument("space transect needs a fixed t");
            if ((pts[i].x - pts[0].x - static_cast<double>(i) * dx).norm() >
                1e-9 * (pts[0].x.norm() + static_cast<double>(n) * dx.norm()))
                throw std::invalid_argument("space transect is not regular");
        }
        unit = dx.norm();
    }
    const std::size_t ns = table.seeds.size();
    std::vector<IncrementStat> stats;
    Eigen::ArrayXd y(static_cast<Eigen::Index>(ns));
    for (std::size_t lag = 1; lag < n; ++lag) {
        for (std::size_t s = 0; s < ns; ++s) {
            double acc = 0.0;
            for (std::size_t i = 0; i + lag < n; ++i)
                acc += std::pow(std::abs(table.value(s, theta, i + lag) - table.value(s, theta, i)), p);
            y[static_cast<Eigen::Index>(s)] = acc / static_cast<double>(n - lag);
        }
        IncrementStat st;
        st.lag = unit * static_cast<double>(lag);
        st.p = p;
        st.estimate = y.mean();
        if (ns > 1) {
            const double nn = static_cast<double>(ns);
            const Eigen::ArrayXd loo = (y.sum() - y) / (nn - 1.0);
            st.std_error = std::sqrt((nn - 1.0) / nn * (loo - loo.mean()).square().sum());
        }
        stats.push_back(st);
    }
    return stats;
}

void write_ensemble_csv(std::ostream& os, const EnsembleTable& table, const std::string& comment) {
    if (!comment.empty()) os << "# " << comment << '\n';
    os << "seed,theta,t,x,value\n";
    std::vector<std::string> labels, ts, xs;
    for (const auto& p : table.thetas) labels.push_back(csv_field(theta_label(p)));
    for (const auto& pt : table.points) {
        ts.push_back(format_double(pt.t));
        std::string x;
        for (Eigen::Index i = 0; i < pt.x.size(); ++i) x += (i ? " " : "") + format_double(pt.x[i]);
        xs.push_back(csv_field(x));
    }
    for (std::size_t s = 0; s < table.seeds.size(); ++s)
        for (std::size_t th = 0; th < table.thetas.size(); ++th)
            for (std::size_t p = 0; p < table.points.size(); ++p)
                os << table.seeds[s] << ',' << labels[th] << ',' << ts[p] << ',' << xs[p] << ','
                   << format_double(table.value(s, th, p)) << '\n';
}

}  // namespace anderson
