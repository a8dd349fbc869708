#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anderson/closed_forms.hpp"
#include "anderson/spectral_noise.hpp"
#include "oracle.hpp"

#include <sstream>

using namespace anderson;
using Eigen::VectorXd;

namespace {
Lattice small_lattice(int dim = 1) {
    Lattice l;
    l.tau_max = 8.0;
    l.xi_max = 8.0;
    l.n_tau = 16;
    l.n_xi = dim == 1 ? 15 : 6;
    l.dim = dim;
    return l;
}
}  // namespace

TEST_CASE("Philox known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("lattice geometry") {
    for (int dim : {1, 2}) {
        const Lattice l = small_lattice(dim);
        check_lattice(l);
        CHECK(l.volume() == doctest::Approx(l.d_tau() * std::pow(l.d_xi(), dim)));
        for (Eigen::Index c = 0; c < l.size(); ++c) {
            const Eigen::Index m = l.mirror(c);
            CHECK(l.mirror(m) == c);
            const Eigen::Index it = c % l.n_tau, ix = c / l.n_tau;
            const Eigen::Index mt = m % l.n_tau, mx = m / l.n_tau;
            CHECK(l.tau_center(static_cast<int>(mt)) == doctest::Approx(-l.tau_center(static_cast<int>(it))));
            CHECK((l.xi_vector(mx) + l.xi_vector(ix)).norm() < 1e-12);
        }
    }
    const Lattice d = default_lattice(2.0);
    CHECK(d.tau_max == 32.0);
    CHECK(d.xi_max == 64.0);
    CHECK(d.n_tau == 256);
    CHECK(d.n_xi == 256);
    Lattice bad = small_lattice();
    bad.n_xi = 0;
    CHECK_THROWS(check_lattice(bad));
}

TEST_CASE("draws: symmetry, determinism, thread independence") {
    for (int dim : {1, 2}) {
        const Lattice l = small_lattice(dim);
        const NoiseDraw a = draw_noise(l, 42);
        const NoiseDraw b = draw_noise(l, 42, 4);
        CHECK(a.values == b.values);
        CHECK(draw_noise(l, 43).values != a.values);
        for (Eigen::Index c = 0; c < l.size(); ++c) {
            CHECK(a.values[l.mirror(c)] == std::conj(a.values[c]));
            if (l.mirror(c) == c) CHECK(a.values[c].imag() == 0.0);
        }
    }
}

TEST_CASE("per-cell variance equals the cell volume") {
    Lattice l = small_lattice();
    l.n_tau = 3;
    l.n_xi = 3;  // includes the self-mirrored centre cell
    const int seeds = 10000;
    Eigen::ArrayXd s2 = Eigen::ArrayXd::Zero(l.size()), s4 = Eigen::ArrayXd::Zero(l.size());
    for (int s = 0; s < seeds; ++s) {
        const Eigen::ArrayXd v = draw_noise(l, static_cast<std::uint64_t>(s)).values.cwiseAbs2().array();
        s2 += v;
        s4 += v * v;
    }
    for (Eigen::Index c = 0; c < l.size(); ++c) {
        const double mean = s2[c] / seeds;
        const double se = std::sqrt((s4[c] / seeds - mean * mean) / seeds);
        CHECK(std::abs(mean - l.volume()) <= 3 * se);
    }
}

TEST_CASE("weights") {
    const auto p = make_regular(0.5, 1);
    const double ch0 = riesz_time_constants(0.75).c_h0;
    VectorXd xi = VectorXd::Constant(1, 2.0);
    CHECK(spectral_weight(p, 3.0, xi) ==
          doctest::Approx(std::sqrt(ch0 * std::pow(3.0, -0.5) * std::pow(2.0, -0.5))));
    const auto r = make_rough(0.3);
    CHECK(spectral_weight(r, 3.0, xi) ==
          doctest::Approx(std::sqrt(ch0 * riesz_space_constant(0.3)) * std::pow(3.0, 0.5 - 0.75) * std::pow(2.0, 0.2)));
    // H -> 1/2 from below: |xi|^{1/2-H} -> 1
    CHECK(spectral_weight(make_rough(0.4999999), 1.0, xi) == doctest::Approx(spectral_weight(make_rough(0.4999998), 1.0, xi)));

    // origin cell of a d = 1 lattice: mean of |xi|^{-alpha} over [-h/2, h/2]
    const Lattice l = small_lattice();
    const int mid = (l.n_xi - 1) / 2;
    CHECK(l.xi_center(mid) == 0.0);
    const double h = l.d_xi();
    const double want_xi = 2.0 * std::pow(h / 2, 0.5) / 0.5 / h;
    CHECK(xi_weight_sq(p, 0.0) == std::numeric_limits<double>::infinity());
    const CellDescriptor cd{l.n_tau / 2, mid, &l};
    const double tau = l.tau_center(l.n_tau / 2);
    const double w = spectral_weight(p, tau, l.xi_vector(mid), cd);
    const double tau_part = power_cell_mean(tau - l.d_tau() / 2, tau + l.d_tau() / 2, -0.5) * ch0;
    CHECK(w * w == doctest::Approx(tau_part * want_xi));
    // separable factors agree with spectral_weight
    const auto lw = lattice_weights(l, p);
    for (int it = 0; it < l.n_tau; ++it)
        for (int ix = 0; ix < l.n_xi; ++ix) {
            const CellDescriptor c{it, ix, &l};
            CHECK(lw.tau_w[it] * lw.xi_w[ix] ==
                  doctest::Approx(spectral_weight(p, l.tau_center(it), l.xi_vector(ix), c)).epsilon(1e-12));
        }
    CHECK_THROWS(lattice_weights(l, make_regular(0.5, 2)));
}

TEST_CASE("cell power means against quadrature") {
    for (const auto& r : load_oracle("cell_mean.json"))
        CHECK(rel_err(power_cell_mean(r["lo"], r["hi"], r["e"]), r["mean"]) <= 1e-10);
    CHECK_THROWS(power_cell_mean(0.0, 1.0, -1.0));
}

TEST_CASE("linear functional") {
    const Lattice l = small_lattice();
    const auto p = make_regular(0.5, 1);
    const auto draw = draw_noise(l, 5);
    CHECK(linear_functional(draw, p, [](double, const VectorXd&) { return cplx(0.0); }) == 0.0);
    // not Hermitian-symmetric
    CHECK_THROWS(linear_functional(draw, p, [](double tau, const VectorXd&) { return cplx(0.0, 1.0 + tau * tau); }));
    // linear in the functional
    auto f = [](double tau, const VectorXd& xi) { return box_indicator_fourier(1.0, 0.5, tau, xi(0)); };
    auto g = [](double tau, const VectorXd& xi) { return box_indicator_fourier(0.5, 1.0, tau, xi(0)); };
    const double a = linear_functional(draw, p, f), b = linear_functional(draw, p, g);
    const double ab = linear_functional(draw, p, [&](double tau, const VectorXd& xi) { return f(tau, xi) + 2.0 * g(tau, xi); });
    CHECK(ab == doctest::Approx(a + 2 * b).epsilon(1e-12));
}

TEST_CASE("box transform") {
    CHECK(std::abs(box_indicator_fourier(2.0, 3.0, 0.0, 0.0) - 6.0) < 1e-15);
    const cplx z = box_indicator_fourier(1.0, 1.0, 1.0, 2.0);
    const cplx want = (1.0 - std::exp(cplx(0, -1.0))) / cplx(0, 1.0) * (1.0 - std::exp(cplx(0, -2.0))) / cplx(0, 2.0);
    CHECK(std::abs(z - want) < 1e-14);
    // Hermitian
    CHECK(std::abs(box_indicator_fourier(1.0, 1.0, -1.0, -2.0) - std::conj(z)) < 1e-15);
}

TEST_CASE("empirical isometry and coupling") {
    const Lattice l = small_lattice();
    const auto p1 = make_regular(0.3, 1), p2 = make_regular(0.7, 1);
    auto f = [](double tau, const VectorXd& xi) { return box_indicator_fourier(1.0, 0.5, tau, xi(0)); };
    const double v1 = lattice_covariance(l, p1, p1, f), v2 = lattice_covariance(l, p2, p2, f);
    const double c12 = lattice_covariance(l, p1, p2, f);
    CHECK(c12 * c12 <= v1 * v2);
    const int seeds = 10000;
    std::vector<double> a(seeds), b(seeds);
    for (int s = 0; s < seeds; ++s) {
        const auto d = draw_noise(l, static_cast<std::uint64_t>(s));
        a[s] = linear_functional(d, p1, f);
        b[s] = linear_functional(d, p2, f);
    }
    auto moment = [&](auto&& fn) {
        double m = 0, m2 = 0;
        for (int s = 0; s < seeds; ++s) {
            const double v = fn(s);
            m += v;
            m2 += v * v;
        }
        m /= seeds;
        return std::pair{m, std::sqrt((m2 / seeds - m * m) / seeds)};
    };
    const auto [ea, sea] = moment([&](int s) { return a[s]; });
    CHECK(std::abs(ea) <= 3 * sea);
    const auto [va, seva] = moment([&](int s) { return a[s] * a[s]; });
    CHECK(std::abs(va - v1) <= 3 * seva);
    const auto [cab, secab] = moment([&](int s) { return a[s] * b[s]; });
    CHECK(std::abs(cab - c12) <= 3 * secab);
}

TEST_CASE("rough covariance is proportional to R_H") {
    // separable weights: the time sum gives C_t, the space sum R_H
    Lattice l;
    l.tau_max = 256.0;
    l.n_tau = 2048;
    l.xi_max = 1024.0;
    l.n_xi = 4096;
    const double h = 0.4, t = 1.0;
    const auto p = make_rough(h);
    auto var = [&](double x, double y) {
        return lattice_covariance(l, p, p, [&](double tau, const VectorXd& xi) {
            return box_indicator_fourier(t, x, tau, xi(0)) + box_indicator_fourier(t, y, tau, xi(0));
        });
    };
    const double x = 0.6, y = 0.25;
    const double vx = lattice_covariance(l, p, p, [&](double tau, const VectorXd& xi) { return box_indicator_fourier(t, x, tau, xi(0)); });
    const double vy = lattice_covariance(l, p, p, [&](double tau, const VectorXd& xi) { return box_indicator_fourier(t, y, tau, xi(0)); });
    const double cov = 0.5 * (var(x, y) - vx - vy);
    auto rh = [&](double a, double b) {
        return 0.5 * (std::pow(a, 2 * h) + std::pow(b, 2 * h) - std::pow(std::abs(a - b), 2 * h));
    };
    // C_t = int int gamma0 = t^{2 H0}
    const double ct = std::pow(t, 1.5);
    CHECK(vx == doctest::Approx(ct * rh(x, x)).epsilon(0.02));
    CHECK(cov / vx == doctest::Approx(rh(x, y) / rh(x, x)).epsilon(0.01));
}

TEST_CASE("dump round trip") {
    const Lattice l = small_lattice(2);
    const auto d = draw_noise(l, 9);
    std::stringstream ss;
    write_draw(ss, d);
    const std::string bytes = ss.str();
    CHECK(bytes.substr(0, 4) == "ANDC");
    CHECK(bytes.size() == 4 + 4 + 8 + 5 * 8 + static_cast<std::size_t>(l.size()) * 16);
    const auto back = read_draw(ss);
    CHECK(back.seed == 9);
    CHECK(back.lattice.n_tau == l.n_tau);
    CHECK(back.lattice.n_xi == l.n_xi);
    CHECK(back.lattice.dim == 2);
    CHECK(back.values == d.values);
    std::stringstream junk("XXXX");
    CHECK_THROWS(read_draw(junk));
    std::stringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS(read_draw(cut));
}
