#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "anderson/chaos_quadrature.hpp"
#include "anderson/closed_forms.hpp"
#include "oracle.hpp"

#include <random>
#include <set>

using namespace anderson;
using Eigen::VectorXd;

namespace {
const VectorXd x0 = VectorXd::Zero(1);

QuadratureConfig small_qmc() {
    QuadratureConfig c;
    c.qmc_points = 1 << 13;
    c.qmc_shifts = 8;
    return c;
}
}  // namespace

TEST_CASE("multi-index sets") {
    auto s1 = multiindex_set(1);
    REQUIRE(s1.indices.size() == 1);
    CHECK(s1.indices[0](0) == 1);
    auto s2 = multiindex_set(2);
    std::set<std::vector<int>> got;
    for (const auto& a : s2.indices) got.insert({a(0), a(1)});
    CHECK(got == std::set<std::vector<int>>{{1, 1}, {2, 0}});
    CHECK(multiindex_set(4).indices.size() == 8);
    for (int k = 1; k <= 12; ++k) {
        const auto s = multiindex_set(k);
        CHECK(s.indices.size() == (std::size_t{1} << (k - 1)));
        std::set<std::vector<int>> uniq;
        for (const auto& a : s.indices) {
            CHECK(a.size() == k);
            CHECK(a.sum() == k);
            CHECK((a(0) == 1 || a(0) == 2 || k == 1));
            if (k > 1) CHECK((a(k - 1) == 0 || a(k - 1) == 1));
            for (int j = 0; j < k; ++j) CHECK((a(j) >= 0 && a(j) <= 2));
            uniq.insert(std::vector<int>(a.data(), a.data() + k));
        }
        CHECK(uniq.size() == s.indices.size());
    }
    CHECK_THROWS(multiindex_set(0));
    CHECK_THROWS(multiindex_set(21));
}

TEST_CASE("product inequality") {
    VectorXd e1(1);
    e1 << 2.0;
    const auto b1 = product_bound_check(e1, 0.25);
    CHECK(b1.lhs == doctest::Approx(std::sqrt(2.0)));
    CHECK(b1.rhs == doctest::Approx(std::sqrt(2.0)));
    VectorXd e2(2);
    e2 << 1.0, 1.0;
    const auto b2 = product_bound_check(e2, 0.25);
    CHECK(b2.lhs == 0.0);
    CHECK(b2.rhs > 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ue(-5.0, 5.0), uh(0.01, 0.49);
    for (int i = 0; i < 1000; ++i) {
        const int k = 1 + i % 5;
        VectorXd eta(k);
        for (int j = 0; j < k; ++j) eta(j) = ue(rng);
        const auto b = product_bound_check(eta, uh(rng));
        CHECK(b.lhs <= b.rhs * (1 + 1e-12));
    }
}

TEST_CASE("k = 0 and x independence") {
    const auto p = make_regular(0.5, 1);
    const auto r0 = chaos_moment(p, Equation::Heat, 1.0, x0, 0);
    CHECK(r0.value == 1.0);
    CHECK(r0.error_estimate == 0.0);
    const auto a = chaos_moment(p, Equation::Wave, 1.0, x0, 1);
    const auto b = chaos_moment(p, Equation::Wave, 1.0, VectorXd::Constant(1, 0.37), 1);
    CHECK(a.value == b.value);
    CHECK_THROWS(chaos_moment(p, Equation::Heat, 1.0, VectorXd::Zero(2), 1));
}

TEST_CASE("first chaos against the time-domain oracle") {
    for (const auto& r : load_oracle("chaos_k1.json")) {
        const int d = r["d"];
        const double h0 = r["h0"];
        const NoiseParam p = r["regime"] == "regular" ? make_regular(r["theta"], d, h0) : make_rough(r["theta"], h0);
        const auto m = chaos_moment(p, parse_equation(r["eq"]), r["t"], VectorXd::Zero(d), 1);
        INFO(r.dump());
        CHECK(m.method == QuadMethod::TensorQuadrature);
        CHECK(rel_err(m.value, r["value"]) <= 1e-3);
        CHECK(m.error_estimate >= 0.0);
    }
}

TEST_CASE("refinement stays within the error estimate") {
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        QuadratureConfig c8, c16;
        c8.level = 8;
        c16.level = 16;
        const auto p = make_regular(0.5, 1);
        const auto a = chaos_moment(p, eq, 1.0, x0, 1, c8);
        const auto b = chaos_moment(p, eq, 1.0, x0, 1, c16);
        CHECK(std::abs(a.value - b.value) < a.error_estimate);
    }
}

TEST_CASE("cross moments") {
    const auto p = make_regular(0.5, 1);
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        const auto m = chaos_moment(p, eq, 1.0, x0, 1);
        const auto c = chaos_cross_moment(p, p, eq, 1.0, x0, 1);
        CHECK(c.value == doctest::Approx(m.value).epsilon(1e-12));

        // |xi|^{-0.2} |xi|^{-0.3} = |xi|^{-0.5}
        const auto mid = chaos_cross_moment(make_regular(0.4, 1), make_regular(0.6, 1), eq, 1.0, x0, 1);
        CHECK(std::abs(mid.value - m.value) <= 2 * (mid.error_estimate + m.error_estimate));

        for (int k : {1, 2}) {
            const auto cfg = small_qmc();
            const auto p1 = make_regular(0.3, 1), p2 = make_regular(0.7, 1);
            const auto c12 = chaos_cross_moment(p1, p2, eq, 1.0, x0, k, cfg);
            const auto m1 = chaos_moment(p1, eq, 1.0, x0, k, cfg);
            const auto m2 = chaos_moment(p2, eq, 1.0, x0, k, cfg);
            CHECK(c12.value * c12.value <= m1.value * m2.value * (1 + 1e-9));
        }
    }
    CHECK_THROWS(chaos_cross_moment(make_regular(0.5, 1), make_rough(0.4), Equation::Heat, 1.0, x0, 1));
    CHECK_THROWS(chaos_cross_moment(make_regular(0.5, 1), make_regular(0.5, 1, 0.6), Equation::Heat, 1.0, x0, 1));
}

TEST_CASE("continuity gap") {
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        const auto p = make_regular(0.5, 1);
        const auto g = continuity_gap(p, p, eq, 1.0, x0, 1);
        CHECK(std::abs(g.value) <= 2 * g.error_estimate + 1e-12);
        const auto q = continuity_gap(make_rough(0.35), make_rough(0.4), eq, 1.0, x0, 1);
        CHECK(q.value >= 0.0);
    }
    // heat, k = 1: alpha_j = 0.5 + 2^{-j} decreases to 0.5
    double prev = 1e300;
    for (int j = 2; j <= 7; ++j) {
        const auto q = continuity_gap(make_regular(0.5 + std::ldexp(1.0, -j), 1), make_regular(0.5, 1),
                                      Equation::Heat, 1.0, x0, 1);
        CHECK(q.value >= 0.0);
        CHECK(q.value < prev);
        prev = q.value;
    }
    // direct definition with separately computed terms
    const auto pn = make_regular(0.6, 1), ps = make_regular(0.5, 1);
    const double direct = chaos_moment(pn, Equation::Heat, 1.0, x0, 1).value +
                          chaos_moment(ps, Equation::Heat, 1.0, x0, 1).value -
                          2 * chaos_cross_moment(pn, ps, Equation::Heat, 1.0, x0, 1).value;
    const auto gap = continuity_gap(pn, ps, Equation::Heat, 1.0, x0, 1);
    CHECK(std::abs(gap.value - direct) <= 2 * gap.error_estimate + 1e-6);
}

TEST_CASE("moment sweep matches single calls") {
    const std::vector<NoiseParam> th{make_regular(0.5, 1), make_regular(0.625, 1), make_regular(0.75, 1)};
    const auto s = moment_sweep(th, 0, Equation::Heat, 1.0, 1);
    REQUIRE(s.moment.size() == 3);
    for (std::size_t i = 0; i < th.size(); ++i) {
        const auto m = chaos_moment(th[i], Equation::Heat, 1.0, x0, 1);
        CHECK(std::abs(s.moment[i].value - m.value) <= s.moment[i].error_estimate + m.error_estimate);
        CHECK(s.gap[i].value >= 0.0);
    }
    CHECK(std::abs(s.gap[0].value) <= 1e-9);
}

TEST_CASE("backends agree") {
    // QMC against the deterministic rule at k = 1
    QuadratureConfig q = small_qmc();
    q.backend = QuadratureConfig::Backend::QMC;
    for (Equation eq : {Equation::Heat, Equation::Wave}) {
        const auto p = make_regular(0.5, 1);
        const auto a = chaos_moment(p, eq, 1.0, x0, 1);
        const auto b = chaos_moment(p, eq, 1.0, x0, 1, q);
        CHECK(b.method == QuadMethod::MCQuadrature);
        CHECK(std::abs(a.value - b.value) <= 3 * b.error_estimate + a.error_estimate);
    }
    // two independent QMC shift sets at k = 2
    QuadratureConfig q2 = small_qmc();
    q2.qmc_seed = 99;
    const auto p = make_rough(0.4);
    const auto a = chaos_moment(p, Equation::Heat, 1.0, x0, 2, small_qmc());
    const auto b = chaos_moment(p, Equation::Heat, 1.0, x0, 2, q2);
    CHECK(std::abs(a.value - b.value) <= 3 * std::hypot(a.error_estimate, b.error_estimate));
    // and the same seed reproduces bit for bit
    CHECK(chaos_moment(p, Equation::Heat, 1.0, x0, 2, small_qmc()).value == a.value);
}

TEST_CASE("thread count does not change results") {
    for (int k : {1, 2}) {
        QuadratureConfig a = small_qmc(), b = small_qmc();
        a.threads = 1;
        b.threads = 3;
        const auto p = make_regular(0.5, 1);
        CHECK(chaos_moment(p, Equation::Wave, 1.0, x0, k, a).value == chaos_moment(p, Equation::Wave, 1.0, x0, k, b).value);
    }
}

TEST_CASE("moment bound from the existence proof") {
    for (Equation eq : {Equation::Heat, Equation::Wave})
        for (double alpha : {0.3, 0.5, 0.8})
            for (int k = 1; k <= 3; ++k) {
                const double t = 1.0;
                const auto m = chaos_moment(make_regular(alpha, 1), eq, t, x0, k, small_qmc());
                CHECK(m.value >= -m.error_estimate);
                CHECK(std::isfinite(m.value));
                CHECK(m.value <= moment_bound_term(eq, 1, alpha, t, k, gamma0_window(t, 0.75)));
            }
}

TEST_CASE("tolerance failure carries the partial result") {
    QuadratureConfig c;
    c.level = 2;
    c.tolerance = 1e-14;
    try {
        chaos_moment(make_regular(0.5, 1), Equation::Heat, 1.0, x0, 1, c);
        FAIL("expected QuadratureFailure");
    } catch (const QuadratureFailure& e) {
        CHECK(e.partial.value > 0.0);
        CHECK(e.partial.error_estimate > 1e-14 * e.partial.value);
    }
    CHECK_THROWS_AS(chaos_moment(make_rough(0.2), Equation::Wave, 1.0, x0, 1), std::invalid_argument);
}

TEST_CASE("Littlewood-Hardy ratio") {
    for (double h0 : {0.6, 0.75, 0.9}) {
        TestFunction ind1{[](const double*) { return 1.0; }, 1.0};
        CHECK(lh_ratio(h0, 1, {ind1}) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(lh_ratio(h0, 2, {ind1}) == doctest::Approx(1.0).epsilon(1e-6));
        // scaling phi(c .) leaves the ratio unchanged
        for (double c : {0.5, 3.0}) {
            TestFunction bump{[](const double* s) { return std::sin(M_PI * s[0]) * std::sin(M_PI * s[0]); }, 1.0};
            TestFunction scaled{[c](const double* s) {
                                    const double v = std::sin(M_PI * c * s[0]);
                                    return v * v;
                                },
                                1.0 / c};
            const double a = lh_ratio(h0, 1, {bump});
            CHECK(std::isfinite(a));
            CHECK(a > 0.0);
            CHECK(lh_ratio(h0, 1, {scaled}) == doctest::Approx(a).epsilon(1e-6));
        }
    }
    CHECK_THROWS(lh_ratio(0.5, 1, {TestFunction{[](const double*) { return 1.0; }, 1.0}}));
    CHECK_THROWS(lh_ratio(0.75, 3, {TestFunction{[](const double*) { return 1.0; }, 1.0}}));
}
