#include "anderson/kernels.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <numeric>
#include <stdexcept>

namespace anderson {

double green_physical(Equation eq, int d, double t, const Eigen::VectorXd& x) {
    if (!(t > 0.0)) throw std::domain_error("green_physical needs t > 0");
    if (x.size() != d) throw std::invalid_argument("dimension mismatch in green_physical");
    const double r2 = x.squaredNorm();
    if (eq == Equation::Heat) return std::pow(2.0 * M_PI * t, -0.5 * d) * std::exp(-r2 / (2.0 * t));
    if (d == 1) return std::sqrt(r2) < t ? 0.5 : 0.0;
    if (d == 2) return r2 < t * t ? 1.0 / (2.0 * M_PI * std::sqrt(t * t - r2)) : 0.0;
    throw std::invalid_argument("wave fundamental solution is not a function for d >= 3");
}

cplx chaos_kernel_fourier(Equation eq, double t, const Eigen::VectorXd& x, const OrderedTimes& times,
                          const std::vector<Eigen::VectorXd>& xis) {
    const std::size_t k = times.times.size();
    if (xis.size() != k) throw std::invalid_argument("need one frequency per time");
    for (std::size_t j = 0; j < k; ++j) {
        if (xis[j].size() != x.size()) throw std::invalid_argument("frequency dimension mismatch");
        const double lo = j == 0 ? 0.0 : times.times[j - 1];
        if (!(times.times[j] > lo && times.times[j] < t)) throw std::invalid_argument("times must be ordered in (0,t)");
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.size());
    double mod = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        eta += xis[j];
        const double next = j + 1 < k ? times.times[j + 1] : t;
        mod *= green_fourier(eq, next - times.times[j], eta.norm());
    }
    return std::polar(mod, -eta.dot(x));
}

cplx symmetrized_kernel_fourier(Equation eq, double t, const Eigen::VectorXd& x, const std::vector<double>& times,
                                const std::vector<Eigen::VectorXd>& xis) {
    const std::size_t k = times.size();
    if (k > 6) throw std::invalid_argument("symmetrization is capped at k = 6");
    if (xis.size() != k) throw std::invalid_argument("need one frequency per time");
    if (k == 0) return 1.0;
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    cplx sum = 0.0;
    double count = 0.0;
    do {
        count += 1.0;
        OrderedTimes ot{std::vector<double>(k), t};
        std::vector<Eigen::VectorXd> xs(k);
        bool ordered = true;
        for (std::size_t j = 0; j < k; ++j) {
            ot.times[j] = times[perm[j]];
            xs[j] = xis[perm[j]];
            const double lo = j == 0 ? 0.0 : ot.times[j - 1];
            if (!(ot.times[j] > lo && ot.times[j] < t)) ordered = false;
        }
        if (ordered) sum += chaos_kernel_fourier(eq, t, x, ot, xs);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return sum / count;
}

namespace {

constexpr int kMaxNodes = 24;

// Taylor expansion about the centroid; accurate when the nodes are within
// about 1/t of each other.
cplx dd_taylor(const cplx* z, const int* idx, int m, double t) {
    cplx c = 0.0;
    for (int i = 0; i < m; ++i) c += z[idx[i]];
    c /= static_cast<double>(m);
    constexpr int J = 40;
    std::array<cplx, J> h{};
    h[0] = 1.0;
    for (int i = 0; i < m; ++i) {
        const cplx w = (z[idx[i]] - c) * t;
        for (int j = 1; j < J; ++j) h[j] += w * h[j - 1];
    }
    // sum_j h_j / (m-1+j)!
    double fact = std::tgamma(static_cast<double>(m));
    cplx sum = 0.0;
    double prev = 1.0;
    for (int j = 0; j < J; ++j) {
        const cplx term = h[j] / fact;
        sum += term;
        // odd terms vanish for node sets symmetric about c
        const double cur = std::abs(term);
        if (j > 4 && cur + prev < 1e-18 * std::abs(sum)) break;
        prev = cur;
        fact *= static_cast<double>(m + j);
    }
    return std::pow(t, m - 1) * std::exp(c * t) * sum;
}

struct DDState {
    const cplx* z;
    const cplx* e;
    double t;
    cplx* memo;
    char* have;
};

cplx dd_rec(DDState& s, std::uint32_t mask) {
    if (s.have[mask]) return s.memo[mask];
    int idx[kMaxNodes];
    int m = 0;
    for (int i = 0; i < kMaxNodes; ++i)
        if (mask & (1u << i)) idx[m++] = i;
    cplx v;
    if (m == 1) {
        v = s.e[idx[0]];
    } else if (m == 2) {
        const cplx dz = s.z[idx[1]] - s.z[idx[0]];
        if (std::abs(dz) * s.t >= 0.5)
            v = (s.e[idx[1]] - s.e[idx[0]]) / dz;
        else
            v = s.e[idx[0]] * s.t * phi1(dz * s.t);
    } else {
        int a = 0, b = 1;
        double best = -1.0;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                const double dd = std::abs(s.z[idx[i]] - s.z[idx[j]]);
                if (dd > best) {
                    best = dd;
                    a = idx[i];
                    b = idx[j];
                }
            }
        if (best * s.t <= 1.0) {
            v = dd_taylor(s.z, idx, m, s.t);
        } else {
            v = (dd_rec(s, mask & ~(1u << a)) - dd_rec(s, mask & ~(1u << b))) / (s.z[b] - s.z[a]);
        }
    }
    s.have[mask] = 1;
    s.memo[mask] = v;
    return v;
}

}  // namespace

cplx exp_divided_difference(std::span<const cplx> nodes, double t) {
    const int n = static_cast<int>(nodes.size());
    if (n == 0) throw std::invalid_argument("divided difference needs at least one node");
    if (n > kMaxNodes) throw std::invalid_argument("too many nodes for divided difference");
    const cplx* z = nodes.data();
    if (n == 1) return std::exp(z[0] * t);
    std::array<cplx, kMaxNodes> e;
    for (int i = 0; i < n; ++i) e[i] = std::exp(z[i] * t);
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) dmin = std::min(dmin, std::abs(z[i] - z[j]));
    if (dmin * t >= 1.0) {
        cplx sum = 0.0;
        for (int i = 0; i < n; ++i) {
            cplx den = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != i) den *= z[i] - z[j];
            sum += e[i] / den;
        }
        return sum;
    }
    const std::size_t subsets = std::size_t(1) << n;
    const std::uint32_t all = static_cast<std::uint32_t>(subsets - 1);
    if (n <= 8) {
        std::array<cplx, 256> memo;
        std::array<char, 256> have{};
        DDState s{z, e.data(), t, memo.data(), have.data()};
        return dd_rec(s, all);
    }
    std::vector<cplx> memo(subsets);
    std::vector<char> have(subsets, 0);
    DDState s{z, e.data(), t, memo.data(), have.data()};
    return dd_rec(s, all);
}

int kernel_nodes(Equation eq, const double* tau, const double* eta_norm, int k, cplx* out) {
    const cplx I(0.0, 1.0);
    // S_j = tau_{j+1} + ... + tau_k
    double S = 0.0;
    for (int j = 0; j < k; ++j) S += tau[j];
    int n = 0;
    out[n++] = -I * S;
    for (int j = 1; j <= k; ++j) {
        S -= tau[j - 1];
        const double r = eta_norm[j - 1];
        if (eq == Equation::Heat) {
            out[n++] = cplx(-0.5 * r * r, -S);
        } else {
            out[n++] = cplx(0.0, r - S);
            out[n++] = cplx(0.0, -r - S);
        }
    }
    return n;
}

cplx time_fourier_kernel(Equation eq, double t, const Eigen::VectorXd& x, std::span<const double> taus,
                         const std::vector<Eigen::VectorXd>& xis) {
    const int k = static_cast<int>(taus.size());
    if (static_cast<int>(xis.size()) != k) throw std::invalid_argument("need one frequency per tau");
    if (k == 0) return 1.0;
    if (2 * k + 1 > kMaxNodes) throw std::invalid_argument("chaos order too large");
    std::vector<double> eta(k);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
    for (int j = 0; j < k; ++j) {
        if (xis[j].size() != x.size()) throw std::invalid_argument("frequency dimension mismatch");
        acc += xis[j];
        eta[j] = acc.norm();
    }
    std::array<cplx, kMaxNodes> z;
    const int n = kernel_nodes(eq, taus.data(), eta.data(), k, z.data());
    return std::polar(1.0, -acc.dot(x)) * exp_divided_difference(std::span<const cplx>(z.data(), n), t);
}

cplx time_fourier_kernel_1d(Equation eq, double t, double x, const double* tau, const double* xi, int k) {
    if (k == 0) return 1.0;
    std::array<double, 12> eta;
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
        acc += xi[j];
        eta[j] = std::abs(acc);
    }
    std::array<cplx, kMaxNodes> z;
    const int n = kernel_nodes(eq, tau, eta.data(), k, z.data());
    const cplx v = exp_divided_difference(std::span<const cplx>(z.data(), n), t);
    return x == 0.0 ? v : std::polar(1.0, -acc * x) * v;
}

}  // namespace anderson
