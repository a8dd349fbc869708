#include "anderson/chaos_quadrature.hpp"

#include "anderson/closed_forms.hpp"
#include "anderson/kernels.hpp"
#include "anderson/spectral_noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace anderson {

std::string to_string(QuadMethod m) { return m == QuadMethod::TensorQuadrature ? "tensor" : "qmc"; }

MultiIndexSet multiindex_set(int k) {
    if (k < 1 || k > 20) throw std::invalid_argument("multi-index order must lie in [1, 20]");
    MultiIndexSet s;
    s.k = k;
    // choice bit j-1 (j = 2..k) set: factor j takes |eta_{j-1}|, else |eta_j|
    const std::uint32_t n = 1u << (k - 1);
    s.indices.reserve(n);
    for (std::uint32_t c = 0; c < n; ++c) {
        Eigen::VectorXi a = Eigen::VectorXi::Zero(k);
        a[0] = 1;
        for (int j = 1; j < k; ++j) {
            if (c >> (j - 1) & 1u)
                ++a[j - 1];
            else
                ++a[j];
        }
        s.indices.push_back(a);
    }
    return s;
}

ProductBound product_bound_check(const Eigen::VectorXd& etas, double h) {
    const int k = static_cast<int>(etas.size());
    if (k < 1) throw std::invalid_argument("need at least one eta");
    const double s = 1.0 - 2.0 * h;
    ProductBound b{1.0, 0.0};
    for (int j = 0; j < k; ++j) b.lhs *= std::pow(std::abs(etas[j] - (j ? etas[j - 1] : 0.0)), s);
    for (const auto& a : multiindex_set(k).indices) {
        double term = 1.0;
        for (int j = 0; j < k; ++j) term *= std::pow(std::abs(etas[j]), s * a[j]);
        b.rhs += term;
    }
    return b;
}

namespace {

struct Family {
    Equation eq;
    double t;
    int k;
    int d;
    TemporalKernel temporal;
    std::vector<NoiseParam> thetas;
    std::size_t target;
    double beta_min;  // smallest / largest |xi| exponent of w^2 over the family
    double beta_max;
};

bool same_temporal(const TemporalKernel& a, const TemporalKernel& b) {
    return a.h0 == b.h0 && a.table_tau == b.table_tau && a.table_g0 == b.table_g0;
}

Family make_family(const std::vector<NoiseParam>& thetas, std::size_t target, Equation eq, double t, int k) {
    if (thetas.empty()) throw std::invalid_argument("empty parameter family");
    if (target >= thetas.size()) throw std::invalid_argument("target index out of range");
    if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
    if (k < 0) throw std::invalid_argument("chaos order must be non-negative");
    Family f{eq, t, k, thetas[0].dim(), thetas[0].temporal, thetas, target, 0.0, 0.0};
    f.beta_min = f.beta_max = thetas[0].xi_exponent();
    for (const auto& p : thetas) {
        require_admissible(p, eq);
        if (!same_family(p, thetas[0])) throw std::invalid_argument("parameters must share regime family and dimension");
        if (!same_temporal(p.temporal, thetas[0].temporal))
            throw std::invalid_argument("parameters must share the temporal kernel");
        f.beta_min = std::min(f.beta_min, p.xi_exponent());
        f.beta_max = std::max(f.beta_max, p.xi_exponent());
    }
    return f;
}

// Sum over permutations of the time-Fourier chaos kernel at x = 0.
// xi holds k frequency vectors of length d back to back.
cplx sym_kernel_sum(Equation eq, double t, int k, int d, const double* tau, const double* xi) {
    std::array<int, 6> perm;
    std::iota(perm.begin(), perm.begin() + k, 0);
    std::array<double, 6> tp, xp, eta;
    std::array<cplx, 16> z;
    Eigen::VectorXd acc(d);
    cplx sum = 0.0;
    do {
        for (int j = 0; j < k; ++j) tp[j] = tau[perm[j]];
        if (d == 1) {
            for (int j = 0; j < k; ++j) xp[j] = xi[perm[j]];
            sum += time_fourier_kernel_1d(eq, t, 0.0, tp.data(), xp.data(), k);
        } else {
            acc.setZero();
            for (int j = 0; j < k; ++j) {
                acc += Eigen::Map<const Eigen::VectorXd>(xi + perm[j] * d, d);
                eta[j] = acc.norm();
            }
            const int n = kernel_nodes(eq, tp.data(), eta.data(), k, z.data());
            sum += exp_divided_difference(std::span<const cplx>(z.data(), n), t);
        }
    } while (std::next_permutation(perm.begin(), perm.begin() + k));
    return sum;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

struct Sums {
    std::vector<double> m, c, g;
    explicit Sums(std::size_t n = 0) : m(n, 0.0), c(n, 0.0), g(n, 0.0) {}
    void add(const Sums& o) {
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] += o.m[i];
            c[i] += o.c[i];
            g[i] += o.g[i];
        }
    }
};

// Accumulate weight * S for every theta given the per-theta root weight
// product P_theta = prod_j sqrt(s_theta(xi_j)).
void accumulate(Sums& s, double ws, const double* root_prod, std::size_t target) {
    const double pt = root_prod[target];
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        const double p = root_prod[i];
        s.m[i] += ws * p * p;
        s.c[i] += ws * p * pt;
        s.g[i] += ws * (p - pt) * (p - pt);
    }
}

double xi_root_weight(const NoiseParam& p, double r) { return std::sqrt(xi_weight_sq(p, r)); }

// ---------------------------------------------------------------- tensor rules

QuadRule tau_rule(const Family& f, int level) {
    const TemporalKernel& tk = f.temporal;
    QuadRule r;
    if (tk.tabulated()) {
        std::vector<double> xs, ws;
        const QuadRule g = gauss_legendre(level);
        for (std::size_t i = 0; i + 1 < tk.table_tau.size(); ++i) {
            const double lo = tk.table_tau[i], hi = tk.table_tau[i + 1];
            for (Eigen::Index q = 0; q < g.size(); ++q) {
                xs.push_back(lo + 0.5 * (hi - lo) * (g.x[q] + 1.0));
                ws.push_back(0.5 * (hi - lo) * g.w[q]);
            }
        }
        const auto n = static_cast<Eigen::Index>(xs.size());
        r.x.resize(2 * n);
        r.w.resize(2 * n);
        for (Eigen::Index i = 0; i < n; ++i) {
            r.x[n - 1 - i] = -xs[i];
            r.w[n - 1 - i] = ws[i];
            r.x[n + i] = xs[i];
            r.w[n + i] = ws[i];
        }
    } else {
        HalfLineSpec s;
        s.scale = 1.0 / f.t;
        s.beta_exact = 1.0 - 2.0 * tk.h0;
        s.inner_levels = 4;
        s.nodes = s.singular_nodes = s.tail_nodes = level;
        s.tail_power = 1.0 / (2.0 * tk.h0);
        if (f.k == 1) {
            s.outer_panels = 9;
            s.nodes_per_length = f.t * level / 8.0;
        } else {
            s.outer_panels = 6;
        }
        r = full_line_rule(s);
    }
    for (Eigen::Index i = 0; i < r.size(); ++i) r.w[i] *= tk.g0(r.x[i]);
    return r;
}

double xi_scale(const Family& f) { return f.eq == Equation::Heat ? 1.0 / std::sqrt(f.t) : 1.0 / f.t; }

// Half-line rule in |xi| including c_d r^{d-1} (k = 1), or full-line rule (k = 2, d = 1).
QuadRule xi_rule(const Family& f, int level) {
    HalfLineSpec s;
    s.scale = xi_scale(f);
    // mixed exponents leave a non-polynomial factor on the innermost panel;
    // push it far enough toward 0 that its share is negligible
    s.inner_levels = f.beta_max > f.beta_min ? 32 : 8;
    s.nodes = s.singular_nodes = s.tail_nodes = level;
    s.tail_power = 1.0;
    if (f.k == 1) {
        s.beta_exact = f.d - 1.0 + f.beta_min;
        s.outer_panels = 9;
        QuadRule r = half_line_rule(s);
        const double cd = sphere_area(f.d);
        r.w *= cd * r.x.pow(f.d - 1.0);
        return r;
    }
    s.beta_exact = f.beta_min;
    s.outer_panels = 6;
    return full_line_rule(s);
}

Sums tensor_pass(const Family& f, int level, int threads) {
    const std::size_t nt = f.thetas.size();
    const QuadRule tr = tau_rule(f, level);
    const QuadRule xr = xi_rule(f, level);
    const Eigen::Index nx = xr.size();
    // root weights per theta per xi node
    Eigen::MatrixXd root(nt, nx);
    for (std::size_t i = 0; i < nt; ++i)
        for (Eigen::Index q = 0; q < nx; ++q) root(static_cast<Eigen::Index>(i), q) = xi_root_weight(f.thetas[i], xr.x[q]);

    std::vector<Sums> slots(static_cast<std::size_t>(nx), Sums(nt));
    if (f.k == 1) {
        parallel_for(static_cast<std::size_t>(nx), threads, [&](std::size_t q) {
            const double r = xr.x[static_cast<Eigen::Index>(q)];
            double a = 0.0;
            for (Eigen::Index j = 0; j < tr.size(); ++j) {
                const double tau = tr.x[j];
                a += tr.w[j] * std::norm(time_fourier_kernel_1d(f.eq, f.t, 0.0, &tau, &r, 1));
            }
            const auto qi = static_cast<Eigen::Index>(q);
            accumulate(slots[q], xr.w[qi] * a, root.col(qi).data(), f.target);
        });
    } else {
        if (f.k != 2 || f.d != 1) throw std::invalid_argument("tensor backend covers k = 1 (any d) and k = 2 (d = 1)");
        parallel_for(static_cast<std::size_t>(nx), threads, [&](std::size_t qi) {
            const auto i = static_cast<Eigen::Index>(qi);
            Eigen::VectorXd rp(static_cast<Eigen::Index>(nt));
            for (Eigen::Index j = i; j < nx; ++j) {
                const double xi[2] = {xr.x[i], xr.x[j]};
                double a = 0.0;
                for (Eigen::Index p = 0; p < tr.size(); ++p) {
                    double row = 0.0;
                    for (Eigen::Index q = 0; q < tr.size(); ++q) {
                        const double tau[2] = {tr.x[p], tr.x[q]};
                        row += tr.w[q] * std::norm(sym_kernel_sum(f.eq, f.t, 2, 1, tau, xi));
                    }
                    a += tr.w[p] * row;
                }
                a *= 0.5 * xr.w[i] * xr.w[j] * (j == i ? 1.0 : 2.0);
                rp = root.col(i).cwiseProduct(root.col(j));
                accumulate(slots[qi], a, rp.data(), f.target);
            }
        });
    }
    Sums total(nt);
    for (const auto& s : slots) total.add(s);
    return total;
}

// ---------------------------------------------------------------- QMC

// x = L v^{p1} / (1 - v)^{p2} on (0, inf)
struct AxisMap {
    double scale = 1.0;
    double p1 = 1.0;
    double p2 = 1.0;
    double half(double v, double& jac) const {
        v = std::clamp(v, 1e-15, 1.0 - 1e-15);
        const double a = std::pow(v, p1), b = std::pow(1.0 - v, -p2);
        jac = scale * (p1 * a / v * b + p2 * a * b / (1.0 - v));
        return scale * a * b;
    }
    double full(double v, double& jac) const {
        const double s = 2.0 * v - 1.0;
        const double x = half(std::abs(s), jac);
        jac *= 2.0;
        return s < 0.0 ? -x : x;
    }
};

double uniform_from(std::uint64_t seed, std::uint64_t counter, int lane) {
    const auto x = philox4x32({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), 0x51u, 0u},
                              {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    const std::uint64_t bits = ((static_cast<std::uint64_t>(x[2 * lane]) << 32) | x[2 * lane + 1]) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1p-53;
}

// Generators of the R_D Kronecker sequence.
Eigen::ArrayXd kronecker_alpha(int dim) {
    double g = 2.0;
    for (int i = 0; i < 60; ++i) g = std::pow(1.0 + g, 1.0 / (dim + 1.0));
    Eigen::ArrayXd a(dim);
    for (int j = 0; j < dim; ++j) a[j] = std::fmod(std::pow(1.0 / g, j + 1.0), 1.0);
    return a;
}

struct QmcResult {
    Sums mean;
    Sums se;
};

QmcResult qmc_pass(const Family& f, const QuadratureConfig& cfg, int threads) {
    const int k = f.k, d = f.d;
    if (k > 6) throw std::invalid_argument("QMC backend covers k <= 6");
    const int dir_coords = d == 1 ? 0 : 2 * ((d + 1) / 2);
    const int per = 2 + dir_coords;  // tau, |xi| (or signed xi), direction normals
    const int dim = k * per;
    const Eigen::ArrayXd alpha = kronecker_alpha(dim);
    const std::size_t nt = f.thetas.size();

    AxisMap tmap, xmap;
    double tab_end = 0.0;
    if (f.temporal.tabulated()) {
        tab_end = f.temporal.table_tau.back();
    } else {
        tmap.scale = 1.0 / f.t;
        tmap.p1 = 1.0 / (2.0 - 2.0 * f.temporal.h0);
        tmap.p2 = 1.0 / (2.0 * f.temporal.h0);
    }
    xmap.scale = xi_scale(f);
    xmap.p1 = 1.0 / (d + f.beta_min);
    xmap.p2 = f.eq == Equation::Heat ? 1.0 : 1.5;
    const double cd = sphere_area(d);
    const double kfact = factorial(k);

    const int shifts = std::max(cfg.qmc_shifts, 2);
    const std::size_t npts = std::max<std::size_t>(cfg.qmc_points, 16);
    constexpr std::size_t chunk = 1024;
    const std::size_t chunks = (npts + chunk - 1) / chunk;
    std::vector<Sums> slots(static_cast<std::size_t>(shifts) * chunks, Sums(nt));

    parallel_for(slots.size(), threads, [&](std::size_t slot) {
        const std::size_t sh = slot / chunks, ch = slot % chunks;
        Eigen::ArrayXd shift(dim);
        for (int j = 0; j < dim; ++j) shift[j] = uniform_from(cfg.qmc_seed, sh * 4096 + static_cast<std::uint64_t>(j), 0);
        std::vector<double> tau(k), xi(static_cast<std::size_t>(k * d));
        Eigen::VectorXd root(static_cast<Eigen::Index>(nt));
        Eigen::VectorXd dir(d);
        Sums& acc = slots[slot];
        const std::size_t lo = ch * chunk, hi = std::min(npts, lo + chunk);
        for (std::size_t n = lo; n < hi; ++n) {
            double w = 1.0, jac;
            root.setOnes();
            for (int j = 0; j < k; ++j) {
                auto coord = [&](int c) {
                    const int idx = j * per + c;
                    const double v = shift[idx] + static_cast<double>(n + 1) * alpha[idx];
                    return v - std::floor(v);
                };
                if (tab_end > 0.0) {
                    tau[j] = tab_end * (2.0 * coord(0) - 1.0);
                    w *= 2.0 * tab_end;
                } else {
                    tau[j] = tmap.full(coord(0), jac);
                    w *= jac;
                }
                w *= f.temporal.g0(tau[j]);
                double r;
                if (d == 1) {
                    xi[j] = xmap.full(coord(1), jac);
                    r = std::abs(xi[j]);
                    w *= jac;
                } else {
                    r = xmap.half(coord(1), jac);
                    w *= jac * cd * std::pow(r, d - 1.0);
                    for (int c = 0; c < d; c += 2) {
                        const double u1 = std::max(coord(2 + c), 1e-300), u2 = coord(3 + c);
                        const double rad = std::sqrt(-2.0 * std::log(u1));
                        dir[c] = rad * std::cos(2.0 * M_PI * u2);
                        if (c + 1 < d) dir[c + 1] = rad * std::sin(2.0 * M_PI * u2);
                    }
                    dir.normalize();
                    for (int c = 0; c < d; ++c) xi[static_cast<std::size_t>(j * d + c)] = r * dir[c];
                }
                for (std::size_t i = 0; i < nt; ++i) root[static_cast<Eigen::Index>(i)] *= xi_root_weight(f.thetas[i], r);
            }
            if (!(w > 0.0) || !std::isfinite(w)) continue;
            const double s = std::norm(sym_kernel_sum(f.eq, f.t, k, d, tau.data(), xi.data())) / kfact;
            accumulate(acc, w * s, root.data(), f.target);
        }
    });

    // per-shift estimates, then mean and standard error over shifts
    std::vector<Sums> per_shift(static_cast<std::size_t>(shifts), Sums(nt));
    for (std::size_t slot = 0; slot < slots.size(); ++slot) per_shift[slot / chunks].add(slots[slot]);
    QmcResult out{Sums(nt), Sums(nt)};
    auto stat = [&](auto member) {
        for (std::size_t i = 0; i < nt; ++i) {
            double mean = 0.0;
            for (const auto& ps : per_shift) mean += (ps.*member)[i] / static_cast<double>(npts);
            mean /= shifts;
            double var = 0.0;
            for (const auto& ps : per_shift) {
                const double e = (ps.*member)[i] / static_cast<double>(npts) - mean;
                var += e * e;
            }
            (out.mean.*member)[i] = mean;
            (out.se.*member)[i] = std::sqrt(var / (shifts - 1.0) / shifts);
        }
    };
    stat(&Sums::m);
    stat(&Sums::c);
    stat(&Sums::g);
    return out;
}

QuadMethod pick_method(const Family& f, const QuadratureConfig& cfg) {
    using B = QuadratureConfig::Backend;
    if (cfg.backend == B::Tensor) {
        if (!(f.k == 1 || (f.k == 2 && f.d == 1)))
            throw std::invalid_argument("tensor backend covers k = 1 (any d) and k = 2 (d = 1)");
        return QuadMethod::TensorQuadrature;
    }
    if (cfg.backend == B::QMC) return QuadMethod::MCQuadrature;
    return f.k == 1 ? QuadMethod::TensorQuadrature : QuadMethod::MCQuadrature;
}

void check_tolerance(const MomentResult& r, const QuadratureConfig& cfg, const std::string& what) {
    if (cfg.tolerance > 0.0 && r.error_estimate > cfg.tolerance * std::abs(r.value))
        throw QuadratureFailure(what + ": error estimate " + format_double(r.error_estimate) + " exceeds tolerance", r);
}

}  // namespace

MomentSweep moment_sweep(const std::vector<NoiseParam>& thetas, std::size_t target, Equation eq, double t, int k,
                         const QuadratureConfig& cfg) {
    const Family f = make_family(thetas, target, eq, t, k);
    const std::size_t nt = thetas.size();
    MomentSweep out;
    out.moment.resize(nt);
    out.cross.resize(nt);
    out.gap.resize(nt);
    if (k == 0) {
        for (std::size_t i = 0; i < nt; ++i) {
            out.moment[i].value = out.cross[i].value = 1.0;
            out.gap[i].value = 0.0;
        }
        return out;
    }
    if (k > 6) throw std::invalid_argument("chaos order above 6 is not supported");
    const int threads = resolve_threads(cfg.threads);
    const QuadMethod method = pick_method(f, cfg);
    Sums value(nt), err(nt);
    if (method == QuadMethod::TensorQuadrature) {
        const int level = std::max(cfg.level, 2);
        value = tensor_pass(f, level, threads);
        const Sums coarse = tensor_pass(f, std::max(level / 2, 1), threads);
        for (std::size_t i = 0; i < nt; ++i) {
            err.m[i] = std::abs(value.m[i] - coarse.m[i]);
            err.c[i] = std::abs(value.c[i] - coarse.c[i]);
            err.g[i] = std::abs(value.g[i] - coarse.g[i]);
        }
    } else {
        const QmcResult q = qmc_pass(f, cfg, threads);
        value = q.mean;
        err = q.se;
    }
    for (std::size_t i = 0; i < nt; ++i) {
        out.moment[i] = {value.m[i], err.m[i], method, false};
        out.cross[i] = {value.c[i], err.c[i], method, false};
        out.gap[i] = {value.g[i], err.g[i], method, false};
        if (out.gap[i].value < 0.0 && -out.gap[i].value <= 2.0 * out.gap[i].error_estimate) {
            out.gap[i].value = 0.0;
            out.gap[i].clipped = true;
        }
    }
    return out;
}

namespace {

void phase_check(const NoiseParam& p, Equation eq, double t, const Eigen::VectorXd& x, int k) {
    if (k == 0) return;
    if (x.size() != p.dim()) throw std::invalid_argument("x has the wrong dimension");
    // the kernel modulus must not depend on x
    std::vector<double> taus(k);
    std::vector<Eigen::VectorXd> xis(k, Eigen::VectorXd(p.dim()));
    for (int j = 0; j < k; ++j) {
        taus[j] = 0.37 * (j + 1) / t;
        for (int a = 0; a < p.dim(); ++a) xis[j][a] = 0.61 * (j + 1) - 0.29 * a;
    }
    const cplx at_x = time_fourier_kernel(eq, t, x, taus, xis);
    const cplx at_0 = time_fourier_kernel(eq, t, Eigen::VectorXd::Zero(p.dim()), taus, xis);
    if (std::abs(std::abs(at_x) - std::abs(at_0)) > 1e-12 * (std::abs(at_0) + 1e-300))
        throw std::logic_error("kernel modulus depends on x");
}

}  // namespace

MomentResult chaos_moment(const NoiseParam& p, Equation eq, double t, const Eigen::VectorXd& x, int k,
                          const QuadratureConfig& cfg) {
    phase_check(p, eq, t, x, k);
    const MomentResult r = moment_sweep({p}, 0, eq, t, k, cfg).moment[0];
    check_tolerance(r, cfg, "chaos_moment");
    return r;
}

MomentResult chaos_cross_moment(const NoiseParam& p1, const NoiseParam& p2, Equation eq, double t,
                                const Eigen::VectorXd& x, int k, const QuadratureConfig& cfg) {
    phase_check(p1, eq, t, x, k);
    const MomentResult r = moment_sweep({p1, p2}, 1, eq, t, k, cfg).cross[0];
    check_tolerance(r, cfg, "chaos_cross_moment");
    return r;
}

MomentResult continuity_gap(const NoiseParam& p_n, const NoiseParam& p_star, Equation eq, double t,
                            const Eigen::VectorXd& x, int k, const QuadratureConfig& cfg) {
    phase_check(p_n, eq, t, x, k);
    const MomentSweep s = moment_sweep({p_n, p_star}, 1, eq, t, k, cfg);
    MomentResult r = s.gap[0];
    // judge the gap against the scale of the moments
    if (cfg.tolerance > 0.0 && r.error_estimate > cfg.tolerance * std::max(s.moment[0].value, s.moment[1].value))
        throw QuadratureFailure("continuity_gap: error estimate exceeds tolerance", r);
    return r;
}

// ---------------------------------------------------------------- Littlewood-Hardy ratio

namespace {

// Nodes (t, s, w) with sum w f(t, s) ~ int_{[0,L]^2} |t-s|^{2H0-2} f(t, s).
struct PairRule {
    std::vector<double> t, s, w;
};

PairRule pair_rule(double L, double h0, int n) {
    const double beta = 2.0 * h0 - 2.0;
    const QuadRule pu = power_rule(n, beta);
    const QuadRule g = gauss_legendre(n);
    PairRule r;
    for (Eigen::Index i = 0; i < pu.size(); ++i) {
        const double u = L * pu.x[i];
        const double wu = std::pow(L, 1.0 + beta) * pu.w[i];
        const double len = L - u;
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            const double s = 0.5 * len * (g.x[j] + 1.0);
            const double w = wu * 0.5 * len * g.w[j];
            r.t.push_back(s + u);
            r.s.push_back(s);
            r.w.push_back(w);
            r.t.push_back(s);
            r.s.push_back(s + u);
            r.w.push_back(w);
        }
    }
    return r;
}

}  // namespace

double lh_ratio(double h0, int k, const std::vector<TestFunction>& samples) {
    if (!(h0 > 0.5 && h0 < 1.0)) throw std::domain_error("h0 must lie in (1/2, 1)");
    if (k < 1 || k > 2) throw std::invalid_argument("lh_ratio supports k = 1, 2");
    if (samples.empty()) throw std::invalid_argument("need at least one test function");
    const double ah = riesz_time_constants(h0).alpha_h0;
    constexpr int n = 24;
    const QuadRule g = gauss_legendre(n);
    double best = 0.0;
    for (const auto& tf : samples) {
        const double L = tf.support;
        if (!(L > 0.0)) throw std::invalid_argument("test function support must be positive");
        const PairRule pr = pair_rule(L, h0, n);
        const std::size_t m = pr.w.size();
        double num = 0.0, den = 0.0;
        if (k == 1) {
            for (std::size_t a = 0; a < m; ++a) num += pr.w[a] * tf.f(&pr.t[a]) * tf.f(&pr.s[a]);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double x = 0.5 * L * (g.x[i] + 1.0);
                den += 0.5 * L * g.w[i] * std::pow(tf.f(&x), 1.0 / h0);
            }
        } else {
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) {
                    const double tt[2] = {pr.t[a], pr.t[b]};
                    const double ss[2] = {pr.s[a], pr.s[b]};
                    num += pr.w[a] * pr.w[b] * tf.f(tt) * tf.f(ss);
                }
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double x[2] = {0.5 * L * (g.x[i] + 1.0), 0.5 * L * (g.x[j] + 1.0)};
                    den += 0.25 * L * L * g.w[i] * g.w[j] * std::pow(tf.f(x), 1.0 / h0);
                }
        }
        if (!std::isfinite(num) || !std::isfinite(den)) throw std::invalid_argument("test function is not integrable");
        if (!(den > 0.0)) continue;
        best = std::max(best, std::pow(ah, k) * num / std::pow(den, 2.0 * h0));
    }
    return best;
}

}  // namespace anderson
