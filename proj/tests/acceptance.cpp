// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "mfl/experiments.hpp"
#include "mfl/langevin.hpp"
#include "mfl/objective.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = time_limit_s <= 0.0 || secs < time_limit_s;
    const bool ok = out.passed && in_time;
    if (!ok) ++failures;
    char timing[96];
    if (time_limit_s > 0.0)
        std::snprintf(timing, sizeof timing, "%.1f s (limit %.0f s)", secs, time_limit_s);
    else
        std::snprintf(timing, sizeof timing, "%.1f s", secs);
    std::printf("%s %d %s: %s; %s\n", ok ? "PASS" : "FAIL", id, name, out.detail.c_str(), timing);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string checks_detail(const mfl::StudyReport& r) {
    std::string s;
    for (const auto& c : r.checks) {
        if (!s.empty()) s += ", ";
        s += c.name + "=" + fmt("%.4g", c.value);
        if (std::isfinite(c.lower) && std::isfinite(c.upper))
            s += " in [" + fmt("%g", c.lower) + ", " + fmt("%g", c.upper) + "]";
        else if (std::isfinite(c.lower))
            s += " >= " + fmt("%g", c.lower);
        else
            s += " <= " + fmt("%g", c.upper);
    }
    return s;
}

mfl::TrainerConfig noiseless(double step, int iters) {
    mfl::TrainerConfig cfg;
    cfg.sigma = 0.0;
    cfg.step_schedule = {step};
    cfg.n_iters = iters;
    return cfg;
}

// ---------------------------------------------------------------------------

Outcome gradient_exactness() {
    constexpr double kTol = 1e-6;
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0);
    const mfl::TimeGrid grid(1.0, 4);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto data = mfl::generate_regression({2, 1.0, {}}, 2, 1000 + seed);
        const auto cloud = mfl::cloud_init(3, grid, m.dim_param, mfl::InitLaw::gaussian(0, 1), seed);
        const auto g = mfl::discrete_gradient(m, cloud, data);
        const auto fd = mfl::finite_diff_gradient(m, cloud, data, 1e-5);
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < g.raw().size(); ++r) {
            num = std::max(num, std::abs(g.raw()[r] - fd.raw()[r]));
            den = std::max(den, std::abs(fd.raw()[r]));
        }
        worst = std::max(worst, num / den);
    }
    return {worst <= kTol, "max relative deviation " + fmt("%.3g", worst) + " <= " + fmt("%g", kTol) + " over 20 seeds"};
}

Outcome classical_sgd() {
    constexpr double kTol = 1e-12;
    const int hidden = 4;
    const auto m = mfl::make_builtin_model(mfl::BuiltinKind::one_layer_residual, 1, hidden, 0);
    const mfl::TimeGrid grid(1.0, 1);
    const auto data = mfl::generate_regression({1, 1.0, [](std::span<const double> z, std::span<double> xi) {
                                                    xi[0] = std::sin(2.0 * z[0]);
                                                }},
                                               8, 5)
                          .with_input_channels();
    const auto cloud = mfl::cloud_init(1, grid, m.dim_param, mfl::InitLaw::gaussian(0, 1), 6);
    const double gamma = 0.1;
    const auto next = mfl::langevin_step(m, cloud, data, noiseless(gamma, 1), 0);

    // theta <- theta - gamma * grad (1/N1) sum_k |xi + A1 tanh(A2 xi) - y|^2
    const auto a = cloud.at(0, 0);
    std::vector<double> grad(m.dim_param, 0.0);
    for (int k = 0; k < data.size(); ++k) {
        const double u = data.xi(k)[0], y = data.full(k)[0];
        double phi = 0.0;
        for (int j = 0; j < hidden; ++j) phi += a[j] * std::tanh(a[hidden + j] * u);
        const double r = 2.0 * (u + phi - y) / data.size();
        for (int j = 0; j < hidden; ++j) {
            const double th = std::tanh(a[hidden + j] * u);
            grad[j] += r * th;
            grad[hidden + j] += r * a[j] * (1.0 - th * th) * u;
        }
    }
    double worst = 0.0;
    for (int c = 0; c < m.dim_param; ++c) worst = std::max(worst, std::abs(next.at(0, 0)[c] - (a[c] - gamma * grad[c])));
    return {worst <= kTol, "max |step - regression step| " + fmt("%.3g", worst) + " <= " + fmt("%g", kTol)};
}

Outcome monotone_descent() {
    const auto m = mfl::make_quadratic_toy(1);
    const mfl::TimeGrid grid(1.0, 4);
    int good = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto data = mfl::generate_regression({1, 1.0, {}}, 8, 500 + seed);
        const auto init = mfl::cloud_init(16, grid, 1, mfl::InitLaw::gaussian(0, 1), seed);
        const auto r = mfl::train(m, data, noiseless(1e-3, 100), init);
        bool strict = r.history.records.size() == 101;
        for (std::size_t i = 1; i < r.history.records.size(); ++i)
            strict = strict && r.history.records[i].j < r.history.records[i - 1].j;
        good += strict;
    }
    return {good >= 19, "strictly decreasing J in " + std::to_string(good) + "/20 seeds (need >= 19)"};
}

Outcome study(const mfl::StudyReport& r) { return {r.passed() && !r.checks.empty(), checks_detail(r)}; }

Outcome gibbs() {
    const auto free_run = mfl::run_gibbs_check(mfl::default_gibbs_config(true));
    const auto toy_run = mfl::run_gibbs_check(mfl::default_gibbs_config(false));
    return {free_run.passed() && toy_run.passed(),
            "drift-free " + checks_detail(free_run) + "; quadratic toy " + checks_detail(toy_run)};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Every CSV and .dat output of the report, by file name.
std::vector<std::pair<std::string, std::string>> outputs(const mfl::StudyReport& r, const fs::path& dir) {
    fs::remove_all(dir);
    r.write(dir);
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv" || e.path().extension() == ".dat")
            files.emplace_back(e.path().filename().string(), read_file(e.path()));
    std::sort(files.begin(), files.end());
    return files;
}

Outcome determinism() {
    auto chaos = mfl::default_chaos_config();
    chaos.n2_list = {8, 16};
    chaos.n1_list = {4, 16};
    chaos.n_ref = 64;
    chaos.population_size = 32;
    chaos.repetitions = 2;
    chaos.setup.trainer.n_iters = 20;
    auto euler = mfl::default_euler_config();
    euler.gamma_list = {4e-3, 2e-3};
    euler.final_s = 0.04;
    euler.repetitions = 2;
    auto contraction = mfl::default_contraction_config();
    contraction.n_seeds = 3;
    contraction.setup.trainer.n_iters = 40;
    auto gibbs_cfg = mfl::default_gibbs_config(false);
    gibbs_cfg.setup.n_particles = 256;
    gibbs_cfg.setup.trainer.n_iters = 200;
    auto gen = mfl::default_generalization_config();
    gen.n1_list = {4, 8};
    gen.holdout_n = 64;
    gen.repetitions = 3;
    gen.setup.n_particles = 16;
    gen.setup.trainer.n_iters = 30;

    const std::vector<std::function<mfl::StudyReport()>> runs{
        [&] { return mfl::run_chaos_study(chaos); },       [&] { return mfl::run_euler_study(euler); },
        [&] { return mfl::run_contraction_study(contraction); }, [&] { return mfl::run_gibbs_check(gibbs_cfg); },
        [&] { return mfl::run_generalization_study(gen); }};

    const fs::path root = fs::temp_directory_path() / "mfl_acceptance_determinism";
    const int saved = omp_get_max_threads();
    int files = 0, identical = 0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        std::vector<std::vector<std::pair<std::string, std::string>>> per_run;
        for (int threads : {1, 4, 1}) {
            omp_set_num_threads(threads);
            per_run.push_back(outputs(runs[s](), root / (std::to_string(s) + "_" + std::to_string(per_run.size()))));
        }
        for (std::size_t f = 0; f < per_run[0].size(); ++f) {
            ++files;
            bool same = true;
            for (std::size_t k = 1; k < per_run.size(); ++k)
                same = same && per_run[k].size() == per_run[0].size() && per_run[k][f] == per_run[0][f];
            identical += same;
        }
    }
    omp_set_num_threads(saved);
    fs::remove_all(root);
    return {files > 0 && identical == files,
            std::to_string(identical) + "/" + std::to_string(files) +
                " output files byte-identical over five studies at 1, 4, 1 threads"};
}

}  // namespace

int main() {
    criterion(1, "gradient exactness", 10, gradient_exactness);
    criterion(2, "classical gradient descent reduction", 0, classical_sgd);
    criterion(3, "monotone descent", 30, monotone_descent);
    criterion(4, "contraction", 120, [] { return study(mfl::run_contraction_study(mfl::default_contraction_config())); });
    criterion(5, "propagation of chaos", 600, [] { return study(mfl::run_chaos_study(mfl::default_chaos_config())); });
    criterion(6, "Euler rate", 300, [] { return study(mfl::run_euler_study(mfl::default_euler_config())); });
    criterion(7, "Gibbs stationarity", 180, gibbs);
    criterion(8, "generalization scaling", 600,
              [] { return study(mfl::run_generalization_study(mfl::default_generalization_config())); });
    criterion(9, "determinism", 0, determinism);
    std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
