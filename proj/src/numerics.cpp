#include "anderson/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <tuple>

namespace anderson {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

namespace {

// Golub-Welsch for the Jacobi weight (1-x)^a (1+x)^b.
QuadRule golub_welsch_jacobi(int n, double a, double b) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    const double ab = a + b;
    for (int k = 0; k < n; ++k) {
        if (k == 0) {
            J(0, 0) = (b - a) / (ab + 2.0);
        } else {
            const double s = 2.0 * k + ab;
            J(k, k) = (b * b - a * a) / (s * (s + 2.0));
        }
        if (k + 1 < n) {
            const double m = k + 1.0;
            const double s = 2.0 * m + ab;
            double beta;
            if (m == 1.0)
                beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
            else
                beta = 4.0 * m * (m + a) * (m + b) * (m + ab) / (s * s * (s + 1.0) * (s - 1.0));
            J(k, k + 1) = J(k + 1, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                                std::lgamma(ab + 2.0));
    QuadRule r;
    r.x = es.eigenvalues().array();
    r.w = mu0 * es.eigenvectors().row(0).array().square().transpose();
    return r;
}

std::mutex cache_mu;
std::map<std::tuple<int, double, double>, QuadRule>& cache() {
    static std::map<std::tuple<int, double, double>, QuadRule> c;
    return c;
}

}  // namespace

QuadRule gauss_jacobi(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("rule size must be positive");
    if (!(a > -1.0 && b > -1.0)) throw std::domain_error("Jacobi exponents must exceed -1");
    const auto key = std::make_tuple(n, a, b);
    {
        std::lock_guard<std::mutex> lk(cache_mu);
        auto it = cache().find(key);
        if (it != cache().end()) return it->second;
    }
    QuadRule r = golub_welsch_jacobi(n, a, b);
    std::lock_guard<std::mutex> lk(cache_mu);
    cache().emplace(key, r);
    return r;
}

QuadRule gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

QuadRule power_rule(int n, double beta) {
    QuadRule g = gauss_jacobi(n, 0.0, beta);
    QuadRule r;
    r.x = 0.5 * (g.x + 1.0);
    r.w = g.w * std::pow(2.0, -beta - 1.0);
    return r;
}

QuadRule composite_legendre(double a, double b, int panels, int n) {
    const QuadRule g = gauss_legendre(n);
    QuadRule r;
    r.x.resize(panels * n);
    r.w.resize(panels * n);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        r.x.segment(p * n, n) = lo + 0.5 * h * (g.x + 1.0);
        r.w.segment(p * n, n) = 0.5 * h * g.w;
    }
    return r;
}

QuadRule half_line_rule(const HalfLineSpec& s) {
    std::vector<double> xs, ws;
    const QuadRule g = gauss_legendre(s.nodes);
    auto add_panel = [&](double lo, double hi, const QuadRule& rule) {
        for (Eigen::Index i = 0; i < rule.size(); ++i) {
            xs.push_back(lo + 0.5 * (hi - lo) * (rule.x[i] + 1.0));
            ws.push_back(0.5 * (hi - lo) * rule.w[i]);
        }
    };
    const double eps = s.scale * std::ldexp(1.0, -s.inner_levels);
    const QuadRule pr = power_rule(s.singular_nodes, s.beta_exact);
    for (Eigen::Index i = 0; i < pr.size(); ++i) {
        const double x = eps * pr.x[i];
        xs.push_back(x);
        ws.push_back(eps * pr.w[i] * std::pow(eps, s.beta_exact) * std::pow(x, -s.beta_exact));
    }
    for (int l = s.inner_levels; l >= 1; --l)
        add_panel(s.scale * std::ldexp(1.0, -l), s.scale * std::ldexp(1.0, -l + 1), g);
    double lo = s.scale;
    for (int p = 0; p < s.outer_panels; ++p) {
        const double hi = 2.0 * lo;
        const int extra = static_cast<int>(std::ceil(s.nodes_per_length * (hi - lo)));
        add_panel(lo, hi, extra > 0 ? gauss_legendre(s.nodes + extra) : g);
        lo = hi;
    }
    // tail: x = lo * u^{-q}, dx = q lo u^{-q-1} du, u in (0, 1]
    const QuadRule gt = gauss_legendre(s.tail_nodes);
    const double q = s.tail_power;
    for (Eigen::Index i = 0; i < gt.size(); ++i) {
        const double u = 0.5 * (gt.x[i] + 1.0);
        xs.push_back(lo * std::pow(u, -q));
        ws.push_back(0.5 * gt.w[i] * q * lo * std::pow(u, -q - 1.0));
    }
    QuadRule r;
    r.x = Eigen::Map<Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    r.w = Eigen::Map<Eigen::ArrayXd>(ws.data(), static_cast<Eigen::Index>(ws.size()));
    return r;
}

QuadRule full_line_rule(const HalfLineSpec& s) {
    const QuadRule h = half_line_rule(s);
    QuadRule r;
    const Eigen::Index n = h.size();
    r.x.resize(2 * n);
    r.w.resize(2 * n);
    r.x.head(n) = -h.x.reverse();
    r.w.head(n) = h.w.reverse();
    r.x.tail(n) = h.x;
    r.w.tail(n) = h.w;
    return r;
}

cplx phi1(cplx z) {
    if (std::abs(z) > 0.5) return (std::exp(z) - 1.0) / z;
    cplx term = 1.0, sum = 1.0;
    for (int k = 2; k < 30; ++k) {
        term *= z / static_cast<double>(k);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double phi1(double z) {
    if (std::abs(z) > 1e-5) return std::expm1(z) / z;
    return 1.0 + z / 2.0 + z * z / 6.0;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ANDERSON_CHAOS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return 1;
}

}  // namespace anderson
