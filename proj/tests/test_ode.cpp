#include <doctest.h>

#include <cmath>
#include <omp.h>
#include <vector>

#include "fixtures.hpp"
#include "mfl/errors.hpp"
#include "mfl/objective.hpp"
#include "mfl/ode.hpp"
#include "mfl/stats.hpp"

TEST_SUITE("ode") {

TEST_CASE("zero field keeps the state at its input") {
    const mfl::TimeGrid grid(1.0, 5);
    const auto m = mfl::make_drift_free(2, 3);
    const auto data = fx::static_data(2, {{0.5, -1.5}}, {{0.0, 0.0}});
    const auto cloud = mfl::cloud_init(4, grid, 3, mfl::InitLaw::gaussian(0, 1), 2);
    const auto x = mfl::forward_solve(m, cloud, data, 0);
    for (int l = 0; l < grid.n_nodes(); ++l) {
        CHECK(x.row(l)[0] == 0.5);
        CHECK(x.row(l)[1] == -1.5);
    }
}

TEST_CASE("state-independent field is integrated exactly") {
    const mfl::TimeGrid grid(1.0, 4);
    const auto m = mfl::make_quadratic_toy(1);
    const auto data = fx::static_data(1, {{1.0}}, {{0.0}});
    const auto x = mfl::forward_solve(m, fx::constant_cloud(1, grid, 1, 2.0), data, 0);
    CHECK(x.row(4)[0] == 3.0);
}

TEST_CASE("forward Euler is first order on linear growth") {
    const auto m = fx::linear_growth();
    const auto data = fx::static_data(1, {{1.0}}, {{0.0}});
    std::vector<double> log_n, log_err;
    for (int k = 4; k <= 10; ++k) {
        const mfl::TimeGrid grid(1.0, 1 << k);
        const auto x = mfl::forward_solve(m, fx::constant_cloud(1, grid, 1, 1.0), data, 0);
        log_n.push_back(std::log(double(1 << k)));
        log_err.push_back(std::log(std::abs(x.row(1 << k)[0] - std::exp(1.0))));
    }
    const double order = -mfl::fit_line(log_n, log_err).slope;
    CHECK(order >= 0.9);
    CHECK(order <= 1.1);
}

TEST_CASE("adjoint is constant when the field ignores the state") {
    const mfl::TimeGrid grid(1.0, 6);
    const auto m = mfl::make_quadratic_toy(1);
    const auto data = fx::static_data(1, {{0.2}}, {{1.0}});
    const auto cloud = mfl::cloud_init(5, grid, 1, mfl::InitLaw::gaussian(0, 1), 4);
    const auto tr = mfl::solve_trajectories(m, cloud, data, 0);
    const double pn = 2.0 * (tr.x_path.row(6)[0] - 1.0);
    for (int l = 0; l <= 6; ++l) CHECK(tr.p_path.row(l)[0] == doctest::Approx(pn).epsilon(1e-15));
}

TEST_CASE("adjoint of linear growth is the backward product") {
    const auto m = fx::linear_growth();
    const auto data = fx::static_data(1, {{1.0}}, {{0.0}});
    for (int n : {4, 64, 4096}) {
        const mfl::TimeGrid grid(1.0, n);
        const auto tr = mfl::solve_trajectories(m, fx::constant_cloud(1, grid, 1, 1.0), data, 0);
        const double pn = tr.p_path.row(n)[0];
        CHECK(pn == doctest::Approx(2.0 * tr.x_path.row(n)[0]));
        for (int l = 0; l <= n; l += std::max(1, n / 4)) {
            const double product = pn * std::pow(1.0 + grid.dt(), n - l);
            CHECK(tr.p_path.row(l)[0] == doctest::Approx(product).epsilon(1e-12));
        }
        if (n == 4096) CHECK(tr.p_path.row(0)[0] == doctest::Approx(pn * std::exp(1.0)).epsilon(2e-4));
    }
}

TEST_CASE("zero costs give a zero costate and a zero drift") {
    const mfl::TimeGrid grid(1.0, 3);
    const auto m = mfl::make_drift_free(1, 2);
    const auto data = fx::static_data(1, {{0.3}, {-0.1}}, {{1.0}, {2.0}});
    const auto cloud = mfl::cloud_init(4, grid, 2, mfl::InitLaw::gaussian(0, 1), 8);
    const auto tr = mfl::solve_trajectories(m, cloud, data, 1);
    for (double v : tr.p_path.values) CHECK(v == 0.0);
    const auto drift = mfl::mean_field_drift(m, cloud, data);
    for (double v : drift.raw()) CHECK(v == 0.0);
}

TEST_CASE("drift is the exact gradient of the discrete objective") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0);
    const mfl::TimeGrid grid(1.0, 4);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto data = mfl::generate_regression({2, 1.0, {}}, 2, seed);
        const auto cloud = mfl::cloud_init(3, grid, m.dim_param, mfl::InitLaw::gaussian(0, 1), 100 + seed);
        const auto drift = mfl::mean_field_drift(m, cloud, data);
        const auto fd = mfl::finite_diff_gradient(m, cloud, data, 1e-5);
        const double w = grid.dt() / cloud.n_particles();
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < fd.raw().size(); ++r) {
            num = std::max(num, std::abs(w * drift.raw()[r] - fd.raw()[r]));
            den = std::max(den, std::abs(fd.raw()[r]));
        }
        CHECK(num / den <= 1e-6);
        for (int i = 0; i < 3; ++i)
            for (int c = 0; c < m.dim_param; ++c) CHECK(drift.at(i, grid.n_steps())[c] == 0.0);
    }
}

TEST_CASE("serial and parallel drift agree bit for bit") {
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::timeseries_interp, 2, 3, 2);
    const mfl::TimeGrid grid(1.0, 6);
    const auto data = mfl::generate_timeseries({2, {0, 2, 4, 6}}, grid, 9, 3);
    const auto cloud = mfl::cloud_init(17, grid, m.dim_param, mfl::InitLaw::gaussian(0, 1), 6);
    const auto serial = mfl::mean_field_drift_serial(m, cloud, data);
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 3, 4}) {
        omp_set_num_threads(threads);
        CHECK(mfl::mean_field_drift(m, cloud, data, mfl::Exec::parallel) == serial);
        CHECK(mfl::mean_field_drift(m, cloud, data, mfl::Exec::serial) == serial);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("non-finite states are reported with the sample index") {
    const auto m = fx::linear_growth();
    const mfl::TimeGrid grid(1.0, 4);
    const auto data = fx::static_data(1, {{1.0}, {1.0}}, {{0.0}, {0.0}});
    const auto cloud = fx::constant_cloud(1, grid, 1, 1e308);
    CHECK_THROWS_AS(mfl::forward_solve(m, cloud, data, 1), mfl::NonFiniteError);
    try {
        mfl::mean_field_drift(m, cloud, data);
        FAIL("expected an error");
    } catch (const mfl::NonFiniteError& e) {
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
}

TEST_CASE("mismatched shapes are rejected") {
    const mfl::TimeGrid grid(1.0, 2);
    const auto m = mfl::make_quadratic_toy(2);
    const auto data = fx::static_data(1, {{1.0}}, {{0.0}});
    CHECK_THROWS_AS(mfl::forward_solve(m, fx::constant_cloud(1, grid, 2, 0.0), data, 0), mfl::DimensionError);
}

}
