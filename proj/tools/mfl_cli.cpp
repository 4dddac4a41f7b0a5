#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfl/config.hpp"
#include "mfl/errors.hpp"
#include "mfl/experiments.hpp"
#include "mfl/langevin.hpp"
#include "mfl/objective.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Master seed (overrides trainer.seed)");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--threads", c.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
}

json load(const Common& c) { return c.config.empty() ? json::object() : mfl::load_config_file(c.config); }

void apply_common(const Common& c, mfl::StudySetup& su) {
    if (c.seed) su.trainer.seed = *c.seed;
    if (c.threads > 0) omp_set_num_threads(c.threads);
}

int finish_study(const mfl::StudyReport& report, const Common& c) {
    report.write(c.out);
    for (const auto& chk : report.checks)
        std::cout << (chk.passed ? "PASS " : "FAIL ") << chk.name << " value=" << mfl::format_double(chk.value)
                  << " bounds=[" << mfl::format_double(chk.lower) << ", " << mfl::format_double(chk.upper) << "]\n";
    std::cout << report.kind << ": " << (report.passed() ? "passed" : "failed") << " in " << report.wall_seconds
              << " s, outputs in " << c.out << "\n";
    return report.passed() ? 0 : 1;
}

int run_train(const Common& c) {
    mfl::TrainRunConfig cfg = mfl::train_config_from_json(load(c));
    apply_common(c, cfg.setup);
    const auto& su = cfg.setup;
    const mfl::Dataset data = cfg.make_dataset(su.trainer.seed ^ 0x5eed0da7aull);
    const mfl::ParticleCloud init =
        mfl::cloud_init(su.n_particles, su.grid, su.model.dim_param, su.init, su.trainer.seed ^ 0x1417ull);
    const mfl::TrainResult result = mfl::train(su.model, data, su.trainer, init);

    fs::create_directories(c.out);
    {
        std::ofstream os(fs::path(c.out) / "history.csv");
        mfl::write_history_csv(os, result.history);
    }
    {
        std::ofstream os(fs::path(c.out) / "cloud.csv");
        mfl::write_cloud_csv(os, result.cloud);
    }
    {
        std::ofstream os(fs::path(c.out) / "cloud.bin", std::ios::binary);
        mfl::write_cloud_binary(os, result.cloud);
    }
    {
        std::ofstream os(fs::path(c.out) / "history_J.dat");
        for (const auto& r : result.history.records) os << mfl::format_double(r.s) << ' ' << mfl::format_double(r.j) << '\n';
    }
    const auto& last = result.history.records.back();
    json summary = {{"kind", "train"},
                    {"model", su.model.name},
                    {"seed", su.trainer.seed},
                    {"dataset_hash", data.hash()},
                    {"n_particles", su.n_particles},
                    {"n_samples", data.size()},
                    {"n_iters", su.trainer.n_iters},
                    {"final_J", last.j},
                    {"final_grad_norm", last.grad_norm},
                    {"final_second_moment", last.second_moment}};
    if (last.j_sigma) summary["final_Jsigma"] = *last.j_sigma;
    std::ofstream(fs::path(c.out) / "train_summary.json") << summary.dump(2) << '\n';
    std::cout << "train: J " << mfl::format_double(result.history.records.front().j) << " -> "
              << mfl::format_double(last.j) << " after " << su.trainer.n_iters << " iterations, outputs in " << c.out
              << "\n";
    return 0;
}

int run_grad_check(const Common& c, int probes) {
    mfl::TrainRunConfig cfg = mfl::train_config_from_json(load(c));
    apply_common(c, cfg.setup);
    auto& su = cfg.setup;
    const mfl::SelfCheckReport self = mfl::model_grad_selfcheck(su.model, probes, su.trainer.seed);

    su.n_samples = std::min(su.n_samples, 4);
    const mfl::Dataset data = cfg.make_dataset(su.trainer.seed ^ 0x5eed0da7aull);
    const mfl::ParticleCloud cloud = mfl::cloud_init(std::min(su.n_particles, 4), su.grid, su.model.dim_param,
                                                     su.init, su.trainer.seed ^ 0x1417ull);
    const auto exact = mfl::discrete_gradient(su.model, cloud, data);
    const auto fd = mfl::finite_diff_gradient(su.model, cloud, data, 1e-5);
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < exact.raw().size(); ++i) {
        diff += std::pow(exact.raw()[i] - fd.raw()[i], 2);
        norm += fd.raw()[i] * fd.raw()[i];
    }
    const double rel = std::sqrt(diff) / std::max(std::sqrt(norm), 1e-300);
    const bool grad_ok = rel <= 1e-6 || std::sqrt(diff) <= 1e-12;

    json summary = {{"kind", "grad-check"}, {"model", su.model.name}, {"seed", su.trainer.seed},
                    {"selfcheck_threshold", self.threshold}, {"gradient_rel_error", rel},
                    {"gradient_passed", grad_ok}};
    for (const auto& e : self.entries) {
        summary["selfcheck"][e.field] = {{"max_rel_error", e.max_rel_error}, {"passed", e.passed}};
        std::cout << (e.passed ? "PASS " : "FAIL ") << e.field << " max_rel_error=" << mfl::format_double(e.max_rel_error)
                  << "\n";
    }
    std::cout << (grad_ok ? "PASS " : "FAIL ") << "objective gradient vs finite differences rel_error="
              << mfl::format_double(rel) << "\n";
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / "grad_check_summary.json") << summary.dump(2) << '\n';
    return self.passed() && grad_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field Langevin training of neural ODE controls"};
    app.require_subcommand(1);

    Common train_c, grad_c, chaos_c, euler_c, contr_c, gibbs_c, gen_c;
    int probes = 100;
    auto* train_cmd = app.add_subcommand("train", "Train a particle cloud and write history and final cloud");
    add_common(train_cmd, train_c);
    auto* grad_cmd = app.add_subcommand("grad-check", "Check model derivatives and the objective gradient");
    add_common(grad_cmd, grad_c);
    grad_cmd->add_option("--probes", probes, "Random probes per derivative map")->check(CLI::PositiveNumber);
    auto* chaos_cmd = app.add_subcommand("chaos-study", "Propagation-of-chaos rate in N1 and N2");
    add_common(chaos_cmd, chaos_c);
    auto* euler_cmd = app.add_subcommand("euler-study", "Strong error of the Euler-Maruyama discretization");
    add_common(euler_cmd, euler_c);
    auto* contr_cmd = app.add_subcommand("contraction-study", "Contraction of synchronously coupled clouds");
    add_common(contr_cmd, contr_c);
    auto* gibbs_cmd = app.add_subcommand("gibbs-check", "Stationary cloud against the Gibbs density (p = 1)");
    add_common(gibbs_cmd, gibbs_c);
    auto* gen_cmd = app.add_subcommand("generalization-study", "Generalization gap against training-set size");
    add_common(gen_cmd, gen_c);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) return run_train(train_c);
        if (*grad_cmd) return run_grad_check(grad_c, probes);
        if (*chaos_cmd) {
            auto cfg = mfl::chaos_config_from_json(load(chaos_c));
            apply_common(chaos_c, cfg.setup);
            return finish_study(mfl::run_chaos_study(cfg), chaos_c);
        }
        if (*euler_cmd) {
            auto cfg = mfl::euler_config_from_json(load(euler_c));
            apply_common(euler_c, cfg.setup);
            return finish_study(mfl::run_euler_study(cfg), euler_c);
        }
        if (*contr_cmd) {
            auto cfg = mfl::contraction_config_from_json(load(contr_c));
            apply_common(contr_c, cfg.setup);
            return finish_study(mfl::run_contraction_study(cfg), contr_c);
        }
        if (*gibbs_cmd) {
            auto cfg = mfl::gibbs_config_from_json(load(gibbs_c));
            apply_common(gibbs_c, cfg.setup);
            return finish_study(mfl::run_gibbs_check(cfg), gibbs_c);
        }
        if (*gen_cmd) {
            auto cfg = mfl::generalization_config_from_json(load(gen_c));
            apply_common(gen_c, cfg.setup);
            return finish_study(mfl::run_generalization_study(cfg), gen_c);
        }
    } catch (const mfl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
