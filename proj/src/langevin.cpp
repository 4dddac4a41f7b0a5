#include "mfl/langevin.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "mfl/errors.hpp"
#include "mfl/objective.hpp"
#include "mfl/report.hpp"
#include "mfl/rng.hpp"

namespace mfl {

double TrainerConfig::step(int iter) const {
    if (step_schedule.size() == 1) return step_schedule.front();
    if (iter < 0 || iter >= static_cast<int>(step_schedule.size()))
        throw PreconditionError("trainer: step schedule shorter than the iteration count");
    return step_schedule[static_cast<std::size_t>(iter)];
}

double TrainerConfig::s_time(int iter) const {
    if (step_schedule.size() == 1) return iter * step_schedule.front();
    double s = 0.0;
    for (int l = 0; l < iter; ++l) s += step(l);
    return s;
}

void TrainerConfig::validate() const {
    if (!(sigma >= 0.0)) throw PreconditionError("trainer: sigma must be >= 0");
    if (step_schedule.empty()) throw PreconditionError("trainer: empty step schedule");
    for (double h : step_schedule)
        if (!(h > 0.0)) throw PreconditionError("trainer: step increments must be positive");
    if (n_iters < 0) throw PreconditionError("trainer: n_iters must be >= 0");
    if (step_schedule.size() > 1 && static_cast<int>(step_schedule.size()) < n_iters)
        throw PreconditionError("trainer: step schedule shorter than n_iters");
    if (record_every < 1) throw PreconditionError("trainer: record_every must be >= 1");
    if (noise_fine_step < 0.0) throw PreconditionError("trainer: noise_fine_step must be >= 0");
    if (noise_particle_offset < 0) throw PreconditionError("trainer: noise_particle_offset must be >= 0");
    if (!prior.grad_potential || !prior.potential) throw PreconditionError("trainer: prior is not set");
}

double brownian_increment(const TrainerConfig& cfg, int iter, int particle, int node, int coord) {
    const KeyedRng rng(cfg.seed);
    const double h = cfg.step(iter);
    const auto i = static_cast<std::uint32_t>(particle + cfg.noise_particle_offset);
    const auto l = static_cast<std::uint32_t>(node);
    const auto c = static_cast<std::uint32_t>(coord);
    if (cfg.noise_fine_step <= 0.0) return std::sqrt(h) * rng.normal(Stream::noise, static_cast<std::uint32_t>(iter), i, l, c);

    const double fine = cfg.noise_fine_step;
    const long long m = std::llround(h / fine);
    if (m < 1 || std::abs(m * fine - h) > 1e-9 * h)
        throw PreconditionError("trainer: step is not a multiple of the fine noise step");
    const long long start = std::llround(cfg.s_time(iter) / fine);
    double sum = 0.0;
    for (long long q = 0; q < m; ++q) sum += rng.normal(Stream::noise, static_cast<std::uint32_t>(start + q), i, l, c);
    return std::sqrt(fine) * sum;
}

void apply_langevin_update(ParticleCloud& cloud, const ParticleCloud& drift, const TrainerConfig& cfg, int iter) {
    if (!cloud.same_shape(drift)) throw DimensionError("langevin update: drift shape does not match the cloud");
    const double h = cfg.step(iter);
    const double prior_weight = 0.5 * cfg.sigma * cfg.sigma;
    const int n = cloud.n_particles();
    const int nodes = cloud.n_nodes();
    const int p = cloud.dim_param();
    bool bad = false;

#pragma omp parallel for schedule(static) reduction(|| : bad)
    for (int i = 0; i < n; ++i) {
        std::vector<double> grad_u(p);
        for (int l = 0; l < nodes; ++l) {
            auto theta = cloud.at(i, l);
            const auto b = drift.at(i, l);
            cfg.prior.grad_potential(theta, grad_u);
            for (int c = 0; c < p; ++c) {
                const double noise = cfg.sigma > 0.0 ? cfg.sigma * brownian_increment(cfg, iter, i, l, c) : 0.0;
                theta[c] += -h * (b[c] + prior_weight * grad_u[c]) + noise;
                if (!std::isfinite(theta[c])) bad = true;
            }
        }
    }
    if (bad) throw NonFiniteError("langevin update: non-finite particle (step too large?)");
}

ParticleCloud langevin_step(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                            const TrainerConfig& cfg, int iter) {
    if (!cloud.all_finite()) throw NonFiniteError("langevin_step: input cloud is not finite");
    ParticleCloud next = cloud;
    const ParticleCloud drift = mean_field_drift(model, cloud, data, cfg.exec);
    apply_langevin_update(next, drift, cfg, iter);
    return next;
}

namespace {

double drift_norm(const ParticleCloud& drift) {
    double total = 0.0;
    for (int i = 0; i < drift.n_particles(); ++i)
        for (int l = 0; l < drift.grid().n_steps(); ++l)
            for (double v : drift.at(i, l)) total += v * v;
    return std::sqrt(total * drift.grid().dt() / drift.n_particles());
}

bool recorded(int iter, int n_iters, int every) { return iter % every == 0 || iter == n_iters; }

}  // namespace

TrainResult train(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg, const ParticleCloud& init,
                  const IterateCallback& on_iterate) {
    cfg.validate();
    check_compatible(model, init, data);
    TrainResult result{init, {}};
    ParticleCloud& cloud = result.cloud;
    for (int it = 0; it <= cfg.n_iters; ++it) {
        const bool rec = recorded(it, cfg.n_iters, cfg.record_every);
        if (it == cfg.n_iters && !rec) break;
        try {
            const ParticleCloud drift = mean_field_drift(model, cloud, data, cfg.exec);
            if (rec) {
                HistoryRecord r;
                r.iter = it;
                r.s = cfg.s_time(it);
                if (cfg.record_jsigma && cfg.sigma > 0.0) {
                    const ObjectiveValue v = objective_Jsigma(model, cloud, data, cfg.sigma, cfg.prior);
                    r.j = v.j;
                    if (v.ent_term) r.j_sigma = v.j_sigma;
                } else {
                    r.j = objective_J(model, cloud, data, cfg.exec);
                }
                r.grad_norm = drift_norm(drift);
                r.second_moment = cloud.second_moment();
                result.history.records.push_back(r);
            }
            if (it == cfg.n_iters) break;
            apply_langevin_update(cloud, drift, cfg, it);
        } catch (const Error& e) {
            throw NonFiniteError("iteration " + std::to_string(it) + ": " + e.what());
        }
        if (on_iterate) on_iterate(it + 1, cloud);
    }
    return result;
}

void write_history_csv(std::ostream& os, const TrainHistory& history) {
    os << "iter,s,J,Jsigma,grad_norm,second_moment\n";
    for (const auto& r : history.records) {
        os << r.iter << ',' << format_double(r.s) << ',' << format_double(r.j) << ','
           << (r.j_sigma ? format_double(*r.j_sigma) : std::string{}) << ',' << format_double(r.grad_norm) << ','
           << format_double(r.second_moment) << '\n';
    }
}

std::vector<CoupledPoint> coupled_pair_run(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg,
                                           const ParticleCloud& init_a, const ParticleCloud& init_b) {
    cfg.validate();
    if (!init_a.same_shape(init_b)) throw DimensionError("coupled_pair_run: initial clouds differ in shape");
    ParticleCloud a = init_a, b = init_b;
    std::vector<CoupledPoint> series;
    for (int it = 0; it <= cfg.n_iters; ++it) {
        if (recorded(it, cfg.n_iters, cfg.record_every)) series.push_back({it, cfg.s_time(it), paired_distance(a, b)});
        if (it == cfg.n_iters) break;
        try {
            const ParticleCloud da = mean_field_drift(model, a, data, cfg.exec);
            const ParticleCloud db = mean_field_drift(model, b, data, cfg.exec);
            apply_langevin_update(a, da, cfg, it);
            apply_langevin_update(b, db, cfg, it);
        } catch (const Error& e) {
            throw NonFiniteError("iteration " + std::to_string(it) + ": " + e.what());
        }
    }
    return series;
}

double lipschitz_probe(const ModelSpec& model, const Dataset& data, const ParticleCloud& center, int n_probes,
                       double perturbation, std::uint64_t seed) {
    if (n_probes < 1 || !(perturbation > 0.0)) throw PreconditionError("lipschitz_probe: invalid probe settings");
    const KeyedRng rng(seed);
    double best = 0.0;
    for (int q = 0; q < n_probes; ++q) {
        ParticleCloud a = center;
        ParticleCloud b = center;
        const auto uq = static_cast<std::uint32_t>(q);
        for (std::size_t r = 0; r < a.raw().size(); ++r) {
            const auto ur = static_cast<std::uint32_t>(r);
            if (q > 0) a.raw()[r] += 0.5 * rng.normal(Stream::probe, uq, ur, 0);
            b.raw()[r] = a.raw()[r] + perturbation * rng.normal(Stream::probe, uq, ur, 1);
        }
        const ParticleCloud da = mean_field_drift(model, a, data);
        const ParticleCloud db = mean_field_drift(model, b, data);
        const double num = paired_distance(da, db);
        const double den = paired_distance(a, b);
        if (den > 0.0) best = std::max(best, num / den);
    }
    return best;
}

PicardResult picard_solve(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg,
                          const ParticleCloud& init, int n_picard, int n_ref) {
    cfg.validate();
    if (n_picard < 0) throw PreconditionError("picard_solve: n_picard must be >= 0");
    if (n_ref < init.n_particles()) throw PreconditionError("picard_solve: n_ref must be >= N2");
    PicardResult result{init, {}};
    if (n_picard == 0) return result;

    const int n2 = init.n_particles();
    ParticleCloud start(n_ref, init.grid(), init.dim_param(), init.seed());
    for (int j = 0; j < n_ref; ++j)
        for (int l = 0; l < init.n_nodes(); ++l) {
            const auto src = init.at(j % n2, l);
            std::copy(src.begin(), src.end(), start.at(j, l).begin());
        }

    std::vector<ParticleCloud> previous(static_cast<std::size_t>(cfg.n_iters) + 1, start);
    for (int k = 0; k < n_picard; ++k) {
        std::vector<ParticleCloud> current;
        current.reserve(previous.size());
        current.push_back(start);
        ParticleCloud cloud = start;
        for (int it = 0; it < cfg.n_iters; ++it) {
            const ParticleCloud drift = frozen_flow_drift(model, previous[static_cast<std::size_t>(it)], cloud, data);
            apply_langevin_update(cloud, drift, cfg, it);
            current.push_back(cloud);
        }
        double dist = 0.0;
        for (std::size_t it = 0; it < current.size(); ++it)
            dist = std::max(dist, paired_distance_head(current[it], previous[it], n2));
        result.distances.push_back(dist);
        previous = std::move(current);
    }
    result.cloud = previous.back().head(n2);
    return result;
}

}  // namespace mfl
