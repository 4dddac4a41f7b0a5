#include "mfl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "mfl/errors.hpp"

namespace mfl {

using nlohmann::json;

namespace {

/// Walks one JSON object; every key must be consumed before finish().
class Section {
public:
    Section(const json& root, const std::string& name) : name_(name) {
        if (!root.contains(name)) return;
        node_ = &root.at(name);
        if (!node_->is_object()) throw ConfigError("config: section '" + name + "' must be an object");
    }
    Section(const json& node, std::string name, bool) : node_(&node), name_(std::move(name)) {
        if (!node.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
    }

    bool present() const { return node_ != nullptr; }
    bool has(const std::string& key) const { return node_ && node_->contains(key); }

    const json* take(const std::string& key) {
        if (!has(key)) return nullptr;
        used_.insert(key);
        return &node_->at(key);
    }

    void number(const std::string& key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) fail(key, "a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(key, "finite");
        }
    }
    void integer(const std::string& key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) fail(key, "an integer");
            out = v->get<int>();
        }
    }
    void seed(const std::string& key, std::uint64_t& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
                fail(key, "a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) fail(key, "a boolean");
            out = v->get<bool>();
        }
    }
    void text(const std::string& key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) fail(key, "a string");
            out = v->get<std::string>();
        }
    }
    template <class T>
    void list(const std::string& key, std::vector<T>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) fail(key, "an array");
            std::vector<T> tmp;
            for (const auto& e : *v) {
                if constexpr (std::is_integral_v<T>) {
                    if (!e.is_number_integer()) fail(key, "an array of integers");
                } else {
                    if (!e.is_number()) fail(key, "an array of numbers");
                }
                tmp.push_back(e.get<T>());
            }
            out = std::move(tmp);
        }
    }

    void finish() const {
        if (!node_) return;
        for (const auto& [key, value] : node_->items())
            if (!used_.count(key)) throw ConfigError("config: unknown key '" + name_ + "." + key + "'");
    }

    const std::string& name() const { return name_; }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        throw ConfigError("config: '" + name_ + "." + key + "' must be " + what);
    }

    const json* node_ = nullptr;
    std::string name_;
    std::set<std::string> used_;
};

void check_top_level(const json& root) {
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    static const std::set<std::string> allowed{"model", "grid", "trainer", "data", "study"};
    for (const auto& [key, value] : root.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown section '" + key + "'");
}

TargetFn target_by_name(const std::string& name) {
    if (name == "identity") return {};
    if (name == "affine")
        return [](std::span<const double> z, std::span<double> xi) {
            for (std::size_t i = 0; i < z.size(); ++i) xi[i] = 0.5 * z[i] + 1.0;
        };
    if (name == "sine")
        return [](std::span<const double> z, std::span<double> xi) {
            for (std::size_t i = 0; i < z.size(); ++i) xi[i] = std::sin(3.0 * z[i]);
        };
    throw ConfigError("config: unknown data.target '" + name + "'");
}

/// Applies model/grid/trainer/data onto `su`. Returns the timeseries spec
/// when the data section asks for one.
std::optional<TimeseriesSpec> apply_setup(const json& root, StudySetup& su) {
    check_top_level(root);

    Section grid(root, "grid");
    double horizon = su.grid.horizon();
    int n_steps = su.grid.n_steps();
    grid.number("horizon", horizon);
    grid.integer("n_steps", n_steps);
    grid.finish();
    if (!(horizon > 0.0) || n_steps < 1) throw ConfigError("config: grid needs horizon > 0 and n_steps >= 1");
    su.grid = TimeGrid(horizon, n_steps);

    Section trainer(root, "trainer");
    double kappa = su.trainer.prior.kappa;
    double step = su.trainer.step_schedule.front();
    trainer.number("sigma", su.trainer.sigma);
    trainer.number("kappa", kappa);
    trainer.number("step", step);
    trainer.integer("n_iters", su.trainer.n_iters);
    trainer.seed("seed", su.trainer.seed);
    trainer.integer("record_every", su.trainer.record_every);
    trainer.boolean("record_jsigma", su.trainer.record_jsigma);
    trainer.number("noise_fine_step", su.trainer.noise_fine_step);
    trainer.integer("n_particles", su.n_particles);
    if (const json* init = trainer.take("init")) {
        Section s(*init, "trainer.init", true);
        std::string kind = su.init.kind == InitLaw::Kind::gaussian ? "gaussian" : "constant";
        s.text("kind", kind);
        s.number("mean", su.init.mean);
        s.number("std", su.init.std);
        s.number("value", su.init.value);
        s.finish();
        if (kind == "gaussian")
            su.init.kind = InitLaw::Kind::gaussian;
        else if (kind == "constant")
            su.init.kind = InitLaw::Kind::constant;
        else
            throw ConfigError("config: trainer.init.kind must be 'gaussian' or 'constant'");
    }
    trainer.finish();
    if (!(kappa > 0.0)) throw ConfigError("config: trainer.kappa must be > 0");
    if (!(step > 0.0)) throw ConfigError("config: trainer.step must be > 0");
    if (su.trainer.sigma < 0.0) throw ConfigError("config: trainer.sigma must be >= 0");
    if (su.n_particles < 1) throw ConfigError("config: trainer.n_particles must be >= 1");
    su.trainer.prior = gaussian_prior(kappa);
    su.trainer.step_schedule = {step};

    Section data(root, "data");
    std::string data_kind = "regression";
    std::string target;
    std::vector<int> observation_nodes;
    data.text("kind", data_kind);
    data.integer("n_samples", su.n_samples);
    data.number("box", su.data.box);
    data.text("target", target);
    data.list("observation_nodes", observation_nodes);
    data.finish();
    if (su.n_samples < 1) throw ConfigError("config: data.n_samples must be >= 1");
    if (!target.empty()) {
        su.data.target = target_by_name(target);
        su.echo["data_target"] = target;
    }
    if (data_kind != "regression" && data_kind != "timeseries")
        throw ConfigError("config: data.kind must be 'regression' or 'timeseries'");

    Section model(root, "model");
    if (model.present()) {
        std::string kind;
        int d = su.model.dim_state;
        int hidden = 2;
        model.text("kind", kind);
        model.integer("d", d);
        model.integer("hidden", hidden);
        if (model.has("p")) {
            int p = 0;
            model.integer("p", p);
            if (kind != "drift_free") throw ConfigError("config: model.p only applies to drift_free");
            su.model = make_drift_free(d, p);
        }
        model.finish();
        if (d < 1 || hidden < 1) throw ConfigError("config: model.d and model.hidden must be >= 1");
        su.input_channels = false;
        if (kind == "one_layer_residual") {
            su.model = make_builtin_model(BuiltinKind::one_layer_residual, d, hidden, 0);
            su.input_channels = true;
        } else if (kind == "neural_ode_tanh") {
            su.model = make_builtin_model(BuiltinKind::neural_ode_tanh, d, hidden, 0);
        } else if (kind == "timeseries_interp") {
            su.model = make_builtin_model(BuiltinKind::timeseries_interp, d, hidden, d);
        } else if (kind == "quadratic_toy") {
            su.model = make_quadratic_toy(d);
        } else if (kind == "drift_free") {
            if (su.model.name != "drift_free" || su.model.dim_state != d) su.model = make_drift_free(d, su.model.dim_param);
        } else {
            throw ConfigError("config: unknown model.kind '" + kind + "'");
        }
    }
    su.data.d = su.model.dim_state;

    const bool ts_model = su.model.name == "timeseries_interp";
    if ((data_kind == "timeseries") != ts_model)
        throw ConfigError("config: timeseries data goes with the timeseries_interp model and only with it");
    if (data_kind == "timeseries") return TimeseriesSpec{su.model.dim_state, observation_nodes};
    if (!observation_nodes.empty()) throw ConfigError("config: data.observation_nodes needs timeseries data");
    return std::nullopt;
}

void no_timeseries(const std::optional<TimeseriesSpec>& ts, const char* what) {
    if (ts) throw ConfigError(std::string("config: ") + what + " runs on regression data");
}

}  // namespace

Dataset TrainRunConfig::make_dataset(std::uint64_t seed) const {
    if (timeseries) return generate_timeseries(*timeseries, setup.grid, setup.n_samples, seed);
    return setup.make_dataset(setup.n_samples, seed);
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

TrainRunConfig train_config_from_json(const json& root) {
    TrainRunConfig cfg;
    cfg.setup.model = make_builtin_model(BuiltinKind::neural_ode_tanh, 1, 2, 0);
    cfg.setup.trainer.sigma = 0.1;
    cfg.setup.trainer.n_iters = 200;
    cfg.setup.trainer.step_schedule = {1e-2};
    cfg.setup.trainer.record_every = 10;
    cfg.setup.data.target = target_by_name("affine");
    cfg.setup.echo["data_target"] = "affine";
    cfg.timeseries = apply_setup(root, cfg.setup);
    Section study(root, "study");
    study.finish();
    return cfg;
}

ChaosStudyConfig chaos_config_from_json(const json& root) {
    ChaosStudyConfig cfg = default_chaos_config();
    no_timeseries(apply_setup(root, cfg.setup), "chaos-study");
    Section s(root, "study");
    s.list("n2_list", cfg.n2_list);
    s.list("n1_list", cfg.n1_list);
    s.integer("n_ref", cfg.n_ref);
    s.integer("population_size", cfg.population_size);
    s.integer("repetitions", cfg.repetitions);
    s.integer("blocks_per_rep", cfg.blocks_per_rep);
    s.number("slope_lower", cfg.slope_lower);
    s.number("slope_upper", cfg.slope_upper);
    s.finish();
    return cfg;
}

EulerStudyConfig euler_config_from_json(const json& root) {
    EulerStudyConfig cfg = default_euler_config();
    no_timeseries(apply_setup(root, cfg.setup), "euler-study");
    Section s(root, "study");
    s.list("gamma_list", cfg.gamma_list);
    s.integer("ref_divisor", cfg.ref_divisor);
    s.number("final_s", cfg.final_s);
    s.integer("repetitions", cfg.repetitions);
    s.number("slope_lower", cfg.slope_lower);
    s.number("slope_upper", cfg.slope_upper);
    s.finish();
    return cfg;
}

ContractionStudyConfig contraction_config_from_json(const json& root) {
    ContractionStudyConfig cfg = default_contraction_config();
    no_timeseries(apply_setup(root, cfg.setup), "contraction-study");
    Section s(root, "study");
    s.number("init_b_mean", cfg.init_b.mean);
    s.number("init_b_std", cfg.init_b.std);
    s.integer("n_seeds", cfg.n_seeds);
    s.integer("lipschitz_probes", cfg.lipschitz_probes);
    s.number("lipschitz_perturbation", cfg.lipschitz_perturbation);
    s.number("fit_floor", cfg.fit_floor);
    s.number("rate_factor", cfg.rate_factor);
    s.number("regime_factor", cfg.regime_factor);
    s.finish();
    return cfg;
}

GibbsCheckConfig gibbs_config_from_json(const json& root) {
    bool drift_free = true;
    if (root.is_object() && root.contains("study") && root.at("study").is_object() &&
        root.at("study").contains("drift_free")) {
        const json& v = root.at("study").at("drift_free");
        if (!v.is_boolean()) throw ConfigError("config: 'study.drift_free' must be a boolean");
        drift_free = v.get<bool>();
    }
    GibbsCheckConfig cfg = default_gibbs_config(drift_free);
    no_timeseries(apply_setup(root, cfg.setup), "gibbs-check");
    Section s(root, "study");
    s.boolean("drift_free", drift_free);
    s.number("burn_in_fraction", cfg.burn_in_fraction);
    s.integer("snapshot_every", cfg.snapshot_every);
    s.integer("bins", cfg.bins);
    s.number("range_extension", cfg.range_extension);
    s.integer("quadrature_per_bin", cfg.quadrature_per_bin);
    s.number("tv_threshold", cfg.tv_threshold);
    s.finish();
    if (cfg.snapshot_every < 1 || cfg.bins < 1 || cfg.quadrature_per_bin < 1 || cfg.burn_in_fraction < 0.0 ||
        cfg.burn_in_fraction >= 1.0)
        throw ConfigError("config: invalid gibbs-check study settings");
    return cfg;
}

GeneralizationStudyConfig generalization_config_from_json(const json& root) {
    GeneralizationStudyConfig cfg = default_generalization_config();
    no_timeseries(apply_setup(root, cfg.setup), "generalization-study");
    Section s(root, "study");
    s.list("n1_list", cfg.n1_list);
    s.integer("holdout_n", cfg.holdout_n);
    s.integer("repetitions", cfg.repetitions);
    s.integer("reference_iters", cfg.reference_iters);
    s.number("slope_lower", cfg.slope_lower);
    s.number("slope_upper", cfg.slope_upper);
    s.finish();
    return cfg;
}

}  // namespace mfl
