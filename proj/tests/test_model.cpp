#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "mfl/errors.hpp"
#include "mfl/model.hpp"
#include "mfl/rng.hpp"

TEST_SUITE("model") {

TEST_CASE("one_layer_residual does not depend on the state") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::one_layer_residual, 1, 4, 0);
    CHECK(m.dim_param == 8);
    CHECK(m.dim_data == 2);
    const mfl::KeyedRng rng(3);
    std::vector<double> a(8), zeta(2), out(1, 1.0);
    for (int probe = 0; probe < 10; ++probe) {
        for (int i = 0; i < 8; ++i) a[i] = rng.normal(mfl::Stream::probe, probe, i, 0);
        zeta = {rng.normal(mfl::Stream::probe, probe, 0, 1), rng.normal(mfl::Stream::probe, probe, 1, 1)};
        const double x = 5.0 * rng.normal(mfl::Stream::probe, probe, 0, 2);
        m.grad_x_phi(0.3, std::span<const double>(&x, 1), a, zeta, out);
        CHECK(out[0] == 0.0);
    }
}

TEST_CASE("neural_ode_tanh with zero parameters is the zero field") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0);
    CHECK(m.dim_param == 12);
    const std::vector<double> a(12, 0.0), zeta(2, 0.0);
    std::vector<double> out(2, 7.0);
    for (double s : {-3.0, 0.0, 0.5, 10.0}) {
        const std::vector<double> x{s, -2.0 * s};
        m.phi(0.0, x, a, zeta, out);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 0.0);
    }
}

TEST_CASE("neural_ode_tanh hand evaluation at a = (1, 1), x = 0") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 1, 1, 0);
    REQUIRE(m.dim_param == 2);
    const std::vector<double> a{1.0, 1.0}, x{0.0}, zeta{0.0};
    std::vector<double> out(1);
    m.phi(0.0, x, a, zeta, out);
    CHECK(out[0] == 0.0);
    m.grad_x_phi(0.0, x, a, zeta, out);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
    // central difference cross-check
    const double h = 1e-6;
    std::vector<double> up(1), dn(1);
    m.phi(0.0, std::vector<double>{h}, a, zeta, up);
    m.phi(0.0, std::vector<double>{-h}, a, zeta, dn);
    CHECK((up[0] - dn[0]) / (2 * h) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("hamiltonian in the linear case") {
    const auto m = mfl::make_quadratic_toy(1);
    const std::vector<double> x{0.7}, costate{3.0}, a{2.0}, zeta{0.0};
    const auto h = mfl::hamiltonian(m, 0.0, x, costate, a, zeta);
    CHECK(h.value == 6.0);
    REQUIRE(h.grad_a.size() == 1);
    CHECK(h.grad_a[0] == 3.0);
}

TEST_CASE("zero costate leaves only the running cost") {
    const auto m = fx::tanh_with_param_cost();
    const std::vector<double> x{0.3, -0.2}, costate{0.0, 0.0}, zeta{0.0, 0.0};
    std::vector<double> a(12);
    for (int i = 0; i < 12; ++i) a[i] = 0.1 * (i - 6);
    const auto h = mfl::hamiltonian(m, 0.0, x, costate, a, zeta);
    CHECK(h.value == doctest::Approx(m.f(0.0, x, a, zeta)));
    std::vector<double> gaf(12);
    m.grad_a_f(0.0, x, a, zeta, gaf);
    for (int i = 0; i < 12; ++i) CHECK(h.grad_a[i] == doctest::Approx(gaf[i]));
}

TEST_CASE("hamiltonian gradient matches finite differences on random probes") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::timeseries_interp, 2, 3, 2);
    const mfl::KeyedRng rng(11);
    const int p = m.dim_param;
    for (int probe = 0; probe < 20; ++probe) {
        std::vector<double> x(2), costate(2), a(p), zeta(4);
        for (int i = 0; i < 2; ++i) {
            x[i] = rng.normal(mfl::Stream::probe, probe, i, 0);
            costate[i] = rng.normal(mfl::Stream::probe, probe, i, 1);
        }
        for (int i = 0; i < 4; ++i) zeta[i] = rng.normal(mfl::Stream::probe, probe, i, 2);
        for (int i = 0; i < p; ++i) a[i] = rng.normal(mfl::Stream::probe, probe, i, 3);
        const auto h = mfl::hamiltonian(m, 0.25, x, costate, a, zeta);
        for (int i = 0; i < p; ++i) {
            const double step = 1e-5;
            auto up = a, dn = a;
            up[i] += step;
            dn[i] -= step;
            const double fd = (mfl::hamiltonian(m, 0.25, x, costate, up, zeta).value -
                               mfl::hamiltonian(m, 0.25, x, costate, dn, zeta).value) /
                              (2 * step);
            CHECK(std::abs(h.grad_a[i] - fd) / std::max(1.0, std::abs(fd)) <= 1e-5);
        }
    }
}

TEST_CASE("hamiltonian rejects mismatched dimensions") {
    const auto m = mfl::make_quadratic_toy(2);
    const std::vector<double> x{0.0, 0.0}, costate{1.0}, a{0.0, 0.0}, zeta{0.0, 0.0};
    CHECK_THROWS_AS(mfl::hamiltonian(m, 0.0, x, costate, a, zeta), mfl::DimensionError);
}

TEST_CASE("builtin models reject nonpositive dimensions") {
    CHECK_THROWS_AS(mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 0, 3, 0), mfl::Error);
    CHECK_THROWS_AS(mfl::make_builtin_model(mfl::BuiltinKind::one_layer_residual, 1, 0, 0), mfl::Error);
    CHECK_THROWS_AS(mfl::make_builtin_model(mfl::BuiltinKind::timeseries_interp, 1, 2, 0), mfl::Error);
}

TEST_CASE("builtin derivatives pass the finite-difference self-check") {
    for (auto [kind, d, h, w] : {std::tuple{mfl::BuiltinKind::one_layer_residual, 1, 4, 0},
                                 std::tuple{mfl::BuiltinKind::one_layer_residual, 2, 3, 0},
                                 std::tuple{mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0},
                                 std::tuple{mfl::BuiltinKind::timeseries_interp, 2, 2, 2}}) {
        const auto m = mfl::make_builtin_model(kind, d, h, w);
        const auto report = mfl::model_grad_selfcheck(m, 100, 5);
        CAPTURE(m.name);
        CHECK(report.passed());
        CHECK(report.max_error() <= 1e-5);
    }
}

TEST_CASE("self-check flags a wrong gradient") {
    const auto report = mfl::model_grad_selfcheck(fx::tanh_with_param_cost(4.0), 10, 1);
    CHECK_FALSE(report.passed());
    bool flagged = false;
    for (const auto& e : report.entries)
        if (e.field == "grad_a_f") flagged = !e.passed;
    CHECK(flagged);
    CHECK(mfl::model_grad_selfcheck(fx::tanh_with_param_cost(2.0), 10, 1).passed());
}

TEST_CASE("self-check needs at least one probe") {
    CHECK_THROWS_AS(mfl::model_grad_selfcheck(mfl::make_quadratic_toy(1), 0, 1), mfl::PreconditionError);
}

TEST_CASE("gaussian prior potential and gradient") {
    const auto prior = mfl::gaussian_prior(4.0);
    const std::vector<double> a{0.5, -1.0};
    const double expected = 4.0 * (0.25 + 1.0) / 2.0 + std::log(2.0 * M_PI / 4.0);
    CHECK(prior.potential(a) == doctest::Approx(expected).epsilon(1e-14));
    std::vector<double> g(2);
    prior.grad_potential(a, g);
    CHECK(g[0] == 2.0);
    CHECK(g[1] == -4.0);
}

}
