#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <omp.h>
#include <sstream>

#include "fixtures.hpp"
#include "mfl/config.hpp"
#include "mfl/errors.hpp"
#include "mfl/experiments.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mfl_test_" + name);
    fs::remove_all(dir);
    return dir;
}

mfl::ChaosStudyConfig small_chaos() {
    auto cfg = mfl::default_chaos_config();
    cfg.n2_list = {4, 8};
    cfg.n1_list = {4, 16};
    cfg.n_ref = 32;
    cfg.population_size = 32;
    cfg.repetitions = 2;
    cfg.blocks_per_rep = 2;
    cfg.setup.trainer.n_iters = 20;
    return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("identity regression target") {
    const auto d = mfl::generate_regression({1, 2.0, {}}, 50, 3);
    for (int k = 0; k < d.size(); ++k) {
        CHECK(d.xi(k)[0] == d.full(k)[0]);
        CHECK(std::abs(d.full(k)[0]) <= 2.0);
    }
}

TEST_CASE("datasets are reproducible from their seed") {
    const auto a = mfl::generate_regression({2, 1.0, {}}, 20, 8);
    const auto b = mfl::generate_regression({2, 1.0, {}}, 20, 8);
    const auto c = mfl::generate_regression({2, 1.0, {}}, 20, 9);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    for (int k = 0; k < 20; ++k) CHECK(a.sample(k).zeta == b.sample(k).zeta);
    const mfl::TimeGrid grid(1.0, 4);
    CHECK(mfl::generate_timeseries({1, {0, 2}}, grid, 5, 1).hash() == mfl::generate_timeseries({1, {0, 2}}, grid, 5, 1).hash());
}

TEST_CASE("fully observed timeseries interpolates to the true path") {
    const mfl::TimeGrid grid(1.0, 6);
    const auto d = mfl::generate_timeseries({2, {}}, grid, 4, 5);
    CHECK(d.slice_width() == 4);
    for (int k = 0; k < d.size(); ++k)
        for (int l = 0; l < grid.n_nodes(); ++l) {
            const auto s = d.slice(k, l);
            CHECK(s[0] == s[2]);
            CHECK(s[1] == s[3]);
        }
}

TEST_CASE("sparse observations are carried forward") {
    const mfl::TimeGrid grid(1.0, 6);
    const auto d = mfl::generate_timeseries({1, {1, 4}}, grid, 3, 2);
    for (int k = 0; k < d.size(); ++k) {
        const double first = d.slice(k, 1)[1], second = d.slice(k, 4)[1];
        for (int l = 0; l <= 3; ++l) CHECK(d.slice(k, l)[0] == first);
        for (int l = 4; l <= 6; ++l) CHECK(d.slice(k, l)[0] == second);
    }
}

TEST_CASE("invalid dataset shapes are rejected") {
    CHECK_THROWS_AS(mfl::generate_regression({0, 1.0, {}}, 5, 1), mfl::DimensionError);
    CHECK_THROWS_AS(mfl::generate_regression({1, 1.0, {}}, 0, 1), mfl::Error);
    CHECK_THROWS_AS(mfl::generate_timeseries({1, {3, 2}}, mfl::TimeGrid(1.0, 4), 2, 1), mfl::DimensionError);
    CHECK_THROWS_AS(fx::static_data(1, {{0.0}, {1.0}}, {{0.0}, {1.0, 2.0}}), mfl::DimensionError);
}

TEST_CASE("histogram and total variation helpers") {
    const std::vector<double> edges{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> values{0.5, 1.5, 1.7, 2.5, 9.0};
    const auto h = mfl::histogram_masses(values, edges);
    CHECK(h == std::vector<double>{0.2, 0.4, 0.2});
    CHECK(mfl::total_variation(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}) == 0.5);
    CHECK_THROWS_AS(mfl::total_variation(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), mfl::DimensionError);
}

TEST_CASE("prior bin masses match the Gaussian distribution function") {
    std::vector<double> edges;
    for (int b = 0; b <= 40; ++b) edges.push_back(-4.0 + 0.2 * b);
    const auto q = mfl::prior_bin_masses(mfl::gaussian_prior(1.0), edges, 16);
    const double z = std::erf(4.0 / std::sqrt(2.0));
    for (int b = 0; b < 40; ++b) {
        const double exact = 0.5 * (std::erf(edges[b + 1] / std::sqrt(2.0)) - std::erf(edges[b] / std::sqrt(2.0))) / z;
        CHECK(q[b] == doctest::Approx(exact).epsilon(1e-4));
    }
}

TEST_CASE("Gibbs density approaches the prior as sigma grows") {
    const mfl::TimeGrid grid(1.0, 2);
    const auto m = mfl::make_quadratic_toy(1);
    const auto data = fx::static_data(1, {{0.0}, {0.5}}, {{1.5}, {2.0}});
    const auto cloud = mfl::cloud_init(64, grid, 1, mfl::InitLaw::gaussian(0, 1), 2);
    const auto prior = mfl::gaussian_prior(1.0);
    std::vector<double> edges;
    for (int b = 0; b <= 64; ++b) edges.push_back(-5.0 + 10.0 * b / 64);
    const auto gamma = mfl::prior_bin_masses(prior, edges, 16);
    for (int l = 0; l < grid.n_steps(); ++l) {
        double last = 2.0;
        for (double sigma : {1.0, 2.0, 4.0}) {
            const double tv = mfl::total_variation(mfl::gibbs_bin_masses(m, cloud, data, sigma, prior, l, edges, 16), gamma);
            CHECK(tv < last);
            last = tv;
        }
    }
    CHECK(mfl::gibbs_bin_masses(m, cloud, data, 1.0, prior, 2, edges, 16) == gamma);
    const auto wide = mfl::cloud_init(8, grid, 2, mfl::InitLaw::gaussian(0, 1), 2);
    CHECK_THROWS_AS(mfl::gibbs_bin_masses(mfl::make_quadratic_toy(2), wide,
                                          fx::static_data(2, {{0.0, 0.0}}, {{0.0, 0.0}}), 1.0, prior, 0, edges, 4),
                    mfl::DimensionError);
}

TEST_CASE("chaos study compared with itself has zero error") {
    auto cfg = small_chaos();
    cfg.n1_list = {0};
    cfg.n2_list = {32};
    const auto r = mfl::run_chaos_study(cfg);
    REQUIRE(r.tables.size() == 1);
    for (const auto& row : r.tables[0].rows) CHECK(row[3] == 0.0);
}

TEST_CASE("Euler study: the reference step has zero error, noiseless errors are second order") {
    auto cfg = mfl::default_euler_config();
    cfg.gamma_list = {4e-3, 2e-3, 1e-3};
    cfg.ref_divisor = 1;
    cfg.final_s = 0.2;
    cfg.repetitions = 1;
    cfg.setup.n_particles = 4;
    cfg.setup.n_samples = 3;
    auto r = mfl::run_euler_study(cfg);
    CHECK(r.tables[0].rows.back()[1] == 0.0);

    cfg.setup.trainer.sigma = 0.0;
    cfg.ref_divisor = 8;
    r = mfl::run_euler_study(cfg);
    const auto& rows = r.tables[0].rows;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = rows[i - 1][1] / rows[i][1];
        CHECK(ratio >= 3.0);
        CHECK(ratio <= 5.5);
    }
    cfg.final_s = 0.201;
    CHECK_THROWS_AS(mfl::run_euler_study(cfg), mfl::PreconditionError);
}

TEST_CASE("generalization study degenerate cases") {
    auto cfg = mfl::default_generalization_config();
    cfg.n1_list = {0};
    cfg.holdout_n = 64;
    cfg.setup.n_particles = 16;
    cfg.setup.trainer.n_iters = 40;
    auto r = mfl::run_generalization_study(cfg);
    CHECK(r.tables[0].rows[0][2] == 0.0);

    // train = holdout, so only the optimization gap to a long reference remains
    cfg.reference_iters = 600;
    cfg.setup.trainer.n_iters = 25;
    const double short_run = mfl::run_generalization_study(cfg).tables[0].rows[0][2];
    cfg.setup.trainer.n_iters = 50;
    const double long_run = mfl::run_generalization_study(cfg).tables[0].rows[0][2];
    CHECK(long_run < short_run);
}

TEST_CASE("gibbs check requires one parameter") {
    auto cfg = mfl::default_gibbs_config(true);
    cfg.setup.model = mfl::make_drift_free(1, 2);
    CHECK_THROWS_AS(mfl::run_gibbs_check(cfg), mfl::DimensionError);
}

TEST_CASE("study outputs are byte-identical across reruns and thread counts") {
    const auto cfg = small_chaos();
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = mfl::run_chaos_study(cfg);
    omp_set_num_threads(3);
    const auto b = mfl::run_chaos_study(cfg);
    omp_set_num_threads(saved);
    const auto da = scratch_dir("det_a"), db = scratch_dir("det_b");
    a.write(da);
    b.write(db);
    for (const char* f : {"chaos_mse.csv", "chaos_mse_fit.dat"}) {
        REQUIRE(fs::exists(da / f));
        CHECK(slurp(da / f) == slurp(db / f));
    }
    CHECK(fs::exists(da / "chaos_summary.json"));
    const auto header = slurp(da / "chaos_mse.csv").substr(0, 40);
    CHECK(header.rfind("n1,n2,inv_n1_plus_inv_n2,mse,mse_se\n", 0) == 0);
}

TEST_CASE("config sections override defaults") {
    const auto root = nlohmann::json::parse(R"({
        "model": {"kind": "neural_ode_tanh", "d": 1, "hidden": 2},
        "grid": {"horizon": 2.0, "n_steps": 8},
        "trainer": {"sigma": 0.5, "kappa": 3.0, "step": 0.002, "n_iters": 7, "seed": 12,
                    "init": {"kind": "constant", "value": 0.25}},
        "data": {"n_samples": 5, "target": "sine"},
        "study": {"gamma_list": [0.004, 0.002], "repetitions": 2}
    })");
    const auto cfg = mfl::euler_config_from_json(root);
    CHECK(cfg.setup.model.dim_param == 4);
    CHECK(cfg.setup.grid == mfl::TimeGrid(2.0, 8));
    CHECK(cfg.setup.trainer.sigma == 0.5);
    CHECK(cfg.setup.trainer.prior.kappa == 3.0);
    CHECK(cfg.setup.trainer.seed == 12);
    CHECK(cfg.setup.init.kind == mfl::InitLaw::Kind::constant);
    CHECK(cfg.setup.n_samples == 5);
    CHECK(cfg.gamma_list == std::vector<double>{0.004, 0.002});
    CHECK(cfg.repetitions == 2);

    const auto ts = mfl::train_config_from_json(nlohmann::json::parse(
        R"({"model": {"kind": "timeseries_interp", "d": 1, "hidden": 2},
            "data": {"kind": "timeseries", "observation_nodes": [0, 2]}})"));
    REQUIRE(ts.timeseries.has_value());
    const auto data = ts.make_dataset(1);
    CHECK(data.slice_width() == ts.setup.model.dim_data);
}

TEST_CASE("config is strict") {
    using nlohmann::json;
    CHECK_THROWS_AS(mfl::chaos_config_from_json(json::parse(R"({"trainer": {"sigmaa": 1}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::chaos_config_from_json(json::parse(R"({"extra": {}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::chaos_config_from_json(json::parse(R"({"study": {"gamma_list": [1]}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::chaos_config_from_json(json::parse(R"({"trainer": {"n_iters": 1.5}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::chaos_config_from_json(json::parse(R"({"model": {"kind": "resnet"}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::train_config_from_json(json::parse(R"({"data": {"kind": "timeseries"}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::train_config_from_json(json::parse(R"({"study": {"n1_list": [1]}})")), mfl::ConfigError);
    CHECK_THROWS_AS(mfl::gibbs_config_from_json(json::parse(R"({"study": {"drift_free": 1}})")), mfl::ConfigError);
    CHECK_NOTHROW(mfl::gibbs_config_from_json(json::parse(R"({"study": {"drift_free": false, "bins": 32}})")));
}

}
