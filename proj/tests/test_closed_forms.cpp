#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anderson/closed_forms.hpp"
#include "lemma_g.hpp"
#include "oracle.hpp"

#include <random>

using namespace anderson;
using Eigen::ArrayXd;

namespace {
ArrayXd arr(std::initializer_list<double> v) {
    ArrayXd a(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) a[i++] = x;
    return a;
}
}  // namespace

TEST_CASE("simplex examples") {
    CHECK(simplex_power_integral(1.0, arr({0.0, 0.0})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(simplex_power_integral(2.0, arr({0.0})) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(simplex_power_integral(1.0, arr({-0.5})) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(simplex_power_integral(3.0, arr({0.0, 0.0, 0.0})) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK_THROWS_AS(simplex_power_integral(1.0, arr({0.2, -1.0})), std::domain_error);
}

TEST_CASE("simplex against nested quadrature") {
    const auto tab = load_oracle("simplex.json");
    CHECK(tab.size() >= 50);
    for (const auto& r : tab) {
        const auto b = r["betas"].get<std::vector<double>>();
        const ArrayXd betas = Eigen::Map<const ArrayXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        CHECK(rel_err(simplex_power_integral(r["t"], betas), r["value"]) <= 1e-6);
    }
}

TEST_CASE("frequency moments") {
    CHECK(gaussian_freq_moment(1.0, 0.0) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));
    CHECK(gaussian_freq_moment(4.0, 0.0) == doctest::Approx(std::sqrt(M_PI) / 2).epsilon(1e-14));
    CHECK(gaussian_freq_moment(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(gaussian_freq_moment(1.0, -1.0), std::domain_error);
    CHECK(wave_freq_moment(1.0, 0.0) == doctest::Approx(M_PI).epsilon(1e-14));
    CHECK(wave_freq_moment(2.0, 0.0) == doctest::Approx(2 * M_PI).epsilon(1e-14));
    CHECK(wave_freq_moment(1.0, 0.5) ==
          doctest::Approx(std::sqrt(2.0) * 2.0 * std::tgamma(0.5) * std::sin(M_PI / 4)).epsilon(1e-13));
    CHECK_THROWS_AS(wave_freq_moment(1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(wave_freq_moment(1.0, -1.0), std::domain_error);
    // the a = 0 branch is continuous
    CHECK(wave_freq_moment(1.3, 1e-9) == doctest::Approx(wave_freq_moment(1.3, 0.0)).epsilon(1e-8));
    CHECK(wave_freq_moment(1.3, -1e-9) == doctest::Approx(wave_freq_moment(1.3, 0.0)).epsilon(1e-8));

    for (const auto& r : load_oracle("gaussian_moment.json"))
        CHECK(rel_err(gaussian_freq_moment(r["t"], r["a"]), r["value"]) <= 1e-4);
    for (const auto& r : load_oracle("wave_moment.json"))
        CHECK(rel_err(wave_freq_moment(r["t"], r["a"]), r["value"]) <= 1e-4);
}

TEST_CASE("Gamma accuracy") {
    for (const auto& r : load_oracle("gamma.json")) CHECK(rel_err(std::tgamma(r["x"].get<double>()), r["value"]) <= 1e-12);
    // kGammaArgmin is the minimizer
    const double g0 = std::tgamma(kGammaArgmin);
    CHECK(std::tgamma(kGammaArgmin + 1e-4) > g0);
    CHECK(std::tgamma(kGammaArgmin - 1e-4) > g0);
}

TEST_CASE("named constants") {
    CHECK(sphere_area(1) == 2.0);
    CHECK(sphere_area(2) == doctest::Approx(2 * M_PI));
    CHECK(sphere_area(3) == doctest::Approx(4 * M_PI));
    CHECK(riesz_time_constants(0.75).alpha_h0 == doctest::Approx(0.375));
    CHECK(riesz_space_constant(0.5) == doctest::Approx(1.0 / (2 * M_PI)));
    CHECK(riesz_space_constant(0.25) == doctest::Approx(std::tgamma(1.5) * std::sin(M_PI / 4) / (2 * M_PI)));
    CHECK_THROWS_AS(riesz_time_constants(0.5), std::domain_error);
    CHECK(gamma0_window(1.0, 0.75) == doctest::Approx(1.5));
    CHECK(gamma0_window(4.0, 0.75) == doctest::Approx(3.0));
    // 2 int_0^t a_H0 s^{2H0-2} ds by the power-exact rule
    for (double h0 : {0.55, 0.7, 0.9})
        for (double t : {0.3, 1.0, 2.5}) {
            const auto rule = power_rule(4, 2 * h0 - 2);
            const double q = 2.0 * riesz_time_constants(h0).alpha_h0 * std::pow(t, 2 * h0 - 1) * rule.w.sum();
            CHECK(gamma0_window(t, h0) == doctest::Approx(q).epsilon(1e-12));
        }
}

TEST_CASE("Dalang constant") {
    const auto k = dalang_constant(1, 0.5);
    CHECK(k.value == doctest::Approx(M_PI * std::sqrt(2.0)).epsilon(1e-10));
    CHECK(k.bound == doctest::Approx(2 * (1 / 0.5 + 1 / 1.5)));
    CHECK(k.r_heat == doctest::Approx(-0.25));
    CHECK(k.r_wave == doctest::Approx(1.5));
    CHECK_THROWS_AS(dalang_constant(1, 0.0), std::domain_error);
    CHECK_THROWS_AS(dalang_constant(3, 1.0), std::domain_error);
    for (const auto& r : load_oracle("dalang.json"))
        CHECK(rel_err(dalang_constant(r["d"], r["alpha"]).value, r["value"]) <= 1e-8);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const int d = 1 + i % 3;
        const double lo = std::max(d - 2, 0);
        const double a = lo + (d - lo) * (0.005 + 0.99 * u(rng));
        const auto c = dalang_constant(d, a);
        CHECK(c.value > 0.0);
        CHECK(c.value <= c.bound);
    }
}

TEST_CASE("heat k_alpha") {
    CHECK(heat_k_alpha(1.0, 1, 0.5) == doctest::Approx(std::tgamma(0.25)));
    CHECK_THROWS_AS(heat_k_alpha(1.0, 1, 0.0), std::domain_error);
    for (double t : {0.2, 1.0, 3.0})
        CHECK(heat_k_alpha(4 * t, 2, 1.3) == doctest::Approx(heat_k_alpha(t, 2, 1.3) * std::pow(4.0, -0.35)));
}

TEST_CASE("Lemma G quadrature against the brute-force oracle") {
    for (const auto& r : load_oracle("lemma_g.json")) {
        const double got = lemma_g::lhs(parse_equation(r["eq"]), r["d"], r["t"], r["eta"], r["alpha"]);
        CHECK(rel_err(got, r["lhs"]) <= 1e-6);
    }
}

TEST_CASE("tail bound") {
    const double g0 = gamma0_window(1.0, 0.75);
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        const int m0 = tail_threshold(eq, 1, 0.4);
        CHECK_THROWS_AS(chaos_tail_bound(eq, 1, 0.4, 0.6, 1.0, m0 - 1, g0), std::domain_error);
        double prev = chaos_tail_bound(eq, 1, 0.4, 0.6, 1.0, m0, g0);
        CHECK(prev > 0.0);
        for (int m = m0 + 1; m < m0 + 300; ++m) {
            const double v = chaos_tail_bound(eq, 1, 0.4, 0.6, 1.0, m, g0);
            // positive until it underflows
            CHECK((v > 0.0 || prev < 1e-290));
            CHECK(v >= 0.0);
            CHECK(v <= prev);
            prev = v;
        }
        CHECK(prev < 1e-6 * chaos_tail_bound(eq, 1, 0.4, 0.6, 1.0, m0, g0));
    }
    // heat d = 1, [0.4, 0.6]: successive tail ratios grow
    const int m0 = tail_threshold(Equation::Heat, 1, 0.4);
    double last_ratio = 0.0;
    for (int m = m0; m < m0 + 20; ++m) {
        const double r = chaos_tail_bound(Equation::Heat, 1, 0.4, 0.6, 1.0, m, g0) /
                         chaos_tail_bound(Equation::Heat, 1, 0.4, 0.6, 1.0, m + 1, g0);
        CHECK(r > last_ratio);
        last_ratio = r;
    }
    // the tail is the sum of the dominating terms
    double s = 0.0;
    for (int k = m0 + 1; k < m0 + 400; ++k) s += dominating_term(Equation::Heat, 1, 0.4, 0.6, 1.0, k, g0);
    CHECK(chaos_tail_bound(Equation::Heat, 1, 0.4, 0.6, 1.0, m0, g0) == doctest::Approx(s).epsilon(1e-10));
}

TEST_CASE("rough constants") {
    for (double h : {0.05, 0.2, 0.4, 0.49}) CHECK(rough_constants(Equation::Heat, h).c_h1 >= std::tgamma(0.5));
    CHECK(rough_constants(Equation::Heat, 0.4).c_h1 == doctest::Approx(std::tgamma(0.5)));
    CHECK(rough_constants(Equation::Wave, 0.2501).c_h1 > 1e3);
    CHECK(rough_constants(Equation::Wave, 0.26).c_h1 > rough_constants(Equation::Wave, 0.3).c_h1);
    CHECK_THROWS_AS(rough_constants(Equation::Wave, 0.25), std::domain_error);
    const auto c = rough_constants(Equation::Wave, 0.4);
    CHECK(c.c_h1 > 0.0);
    CHECK(c.c_h2 > 0.0);
}

TEST_CASE("constants bundle positive") {
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        const auto b = constants_bundle(make_regular(0.5, 1), eq, 1.0);
        for (double v : {b.c_d, b.alpha_h0, b.c_h0, b.k_value, b.k_bound, b.k_alpha_t, b.gamma0_t}) CHECK(v > 0.0);
        const auto r = constants_bundle(make_rough(0.4), eq, 1.0);
        for (double v : {r.c_d, r.c_h, r.alpha_h0, r.c_h0, r.c_h1, r.c_h2, r.gamma0_t}) CHECK(v > 0.0);
    }
}
