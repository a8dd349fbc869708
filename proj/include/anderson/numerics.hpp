#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <complex>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace anderson {

using cplx = std::complex<double>;

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& s);

// RFC 4180 field: quoted when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);

// Quadrature rule: sum_i w[i] f(x[i]).
struct QuadRule {
    Eigen::ArrayXd x;
    Eigen::ArrayXd w;
    Eigen::Index size() const { return x.size(); }
};

// Nodes and weights on [-1, 1].
QuadRule gauss_legendre(int n);
// Weight (1-x)^a (1+x)^b on [-1, 1].
QuadRule gauss_jacobi(int n, double a, double b);
// int_0^1 f(x) x^beta dx for smooth f.
QuadRule power_rule(int n, double beta);
// Plain composite Gauss-Legendre on [a, b].
QuadRule composite_legendre(double a, double b, int panels, int n);

// Rule for int_0^inf f(x) dx where f(x) ~ x^beta_exact near 0 and decays
// algebraically. Panels are graded geometrically toward 0 and outward from
// `scale`; the innermost panel carries the power-law-exact weight and the
// tail beyond the last panel is mapped by x = X / u^tail_power.
struct HalfLineSpec {
    double scale = 1.0;
    double beta_exact = 0.0;
    int inner_levels = 12;
    int outer_panels = 8;
    int nodes = 8;
    int singular_nodes = 8;
    int tail_nodes = 8;
    double tail_power = 1.0;
    // extra nodes per unit length on the outer panels (oscillatory integrands)
    double nodes_per_length = 0.0;
};
QuadRule half_line_rule(const HalfLineSpec& s);
// Symmetric extension to the real line.
QuadRule full_line_rule(const HalfLineSpec& s);

// (e^z - 1) / z, accurate near 0.
cplx phi1(cplx z);
double phi1(double z);

// Number of workers: requested if > 0, else ANDERSON_CHAOS_THREADS, else 1.
int resolve_threads(int requested);

// Calls f(i) for i in [0, n) on `threads` workers. Each index is visited
// exactly once; callers write into per-index slots so the result does not
// depend on the worker count.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    const int nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    std::vector<std::thread> pool;
    pool.reserve(nt - 1);
    for (int k = 1; k < nt; ++k) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace anderson
