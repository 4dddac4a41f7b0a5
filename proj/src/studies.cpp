#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mfl/errors.hpp"
#include "mfl/experiments.hpp"
#include "mfl/objective.hpp"
#include "mfl/rng.hpp"

namespace mfl {

Dataset StudySetup::make_dataset(int n, std::uint64_t seed) const {
    Dataset d = generate_regression(data, n, seed);
    return input_channels ? d.with_input_channels() : d;
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent seed for (base, purpose, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t purpose, std::uint64_t index) {
    return splitmix(splitmix(base ^ splitmix(purpose)) + index);
}

enum Purpose : std::uint64_t { kData = 1, kInit = 2, kNoise = 3, kDraw = 4, kInitB = 5, kProbe = 6, kHoldout = 7 };

ParticleCloud evolve(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg, ParticleCloud cloud,
                     const IterateCallback& on_iterate = {}) {
    cfg.validate();
    check_compatible(model, cloud, data);
    for (int it = 0; it < cfg.n_iters; ++it) {
        try {
            const ParticleCloud drift = mean_field_drift(model, cloud, data, cfg.exec);
            apply_langevin_update(cloud, drift, cfg, it);
        } catch (const Error& e) {
            throw NonFiniteError("iteration " + std::to_string(it) + ": " + e.what());
        }
        if (on_iterate) on_iterate(it + 1, cloud);
    }
    return cloud;
}

nlohmann::json setup_echo(const StudySetup& s) {
    nlohmann::json j = s.echo;
    j["model"] = {{"name", s.model.name},
                  {"dim_state", s.model.dim_state},
                  {"dim_param", s.model.dim_param},
                  {"dim_data", s.model.dim_data}};
    j["grid"] = {{"horizon", s.grid.horizon()}, {"n_steps", s.grid.n_steps()}};
    j["trainer"] = {{"sigma", s.trainer.sigma},
                    {"kappa", s.trainer.prior.kappa},
                    {"step", s.trainer.step_schedule.front()},
                    {"n_iters", s.trainer.n_iters},
                    {"seed", s.trainer.seed}};
    j["init"] = {{"kind", s.init.kind == InitLaw::Kind::gaussian ? "gaussian" : "constant"},
                 {"mean", s.init.mean},
                 {"std", s.init.std},
                 {"value", s.init.value}};
    j["data"] = {{"d", s.data.d}, {"box", s.data.box}, {"n_samples", s.n_samples}};
    j["n_particles"] = s.n_particles;
    return j;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

FitRecord log_log_fit(std::string name, std::string x_label, std::string y_label, const std::vector<double>& x,
                      const std::vector<double>& y) {
    FitRecord rec;
    rec.name = std::move(name);
    rec.x_label = std::move(x_label);
    rec.y_label = std::move(y_label);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        rec.x.push_back(std::log(x[i]));
        rec.y.push_back(std::log(y[i]));
    }
    if (rec.x.size() < 2) throw PreconditionError("study: fewer than two positive points to fit");
    rec.fit = fit_line(rec.x, rec.y);
    return rec;
}

/// Particles [start, start + n) of a cloud.
ParticleCloud block(const ParticleCloud& cloud, int start, int n) {
    ParticleCloud out(n, cloud.grid(), cloud.dim_param(), cloud.seed());
    const std::size_t stride = static_cast<std::size_t>(cloud.n_nodes()) * cloud.dim_param();
    std::copy_n(cloud.raw().begin() + static_cast<std::ptrdiff_t>(start * stride), n * stride, out.raw().begin());
    return out;
}

/// n i.i.d. draws from the empirical measure of `population`.
Dataset resample(const Dataset& population, int n, std::uint64_t seed) {
    const KeyedRng draw(seed);
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = draw.uniform(Stream::data, static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(k), 0);
        idx[k] = std::min(population.size() - 1, static_cast<int>(u * population.size()));
    }
    return population.subset(idx, "resample");
}

}  // namespace

// ---------------------------------------------------------------------------
// Propagation of chaos

StudyReport run_chaos_study(const ChaosStudyConfig& cfg) {
    const auto t0 = Clock::now();
    const StudySetup& su = cfg.setup;
    if (cfg.n2_list.empty() || cfg.n1_list.empty()) throw PreconditionError("chaos study: empty size lists");
    for (int n2 : cfg.n2_list)
        if (n2 < 1 || n2 > cfg.n_ref) throw PreconditionError("chaos study: N2 must lie in [1, n_ref]");
    for (int n1 : cfg.n1_list)
        if (n1 < 0) throw PreconditionError("chaos study: N1 must be >= 0");
    if (cfg.repetitions < 1 || cfg.population_size < 1 || cfg.blocks_per_rep < 1)
        throw PreconditionError("chaos study: invalid sizes");

    const std::size_t n_cells = cfg.n1_list.size() * cfg.n2_list.size();
    std::vector<std::vector<double>> mse(n_cells);
    std::uint64_t hash = 0;

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t base = su.trainer.seed;
        const Dataset population = su.make_dataset(cfg.population_size, derive_seed(base, kData, rep));
        if (rep == 0) hash = population.hash();
        TrainerConfig tc = su.trainer;
        tc.seed = derive_seed(base, kNoise, rep);
        const ParticleCloud init = cloud_init(cfg.n_ref, su.grid, su.model.dim_param, su.init, derive_seed(base, kInit, rep));
        const ParticleCloud reference = evolve(su.model, population, tc, init);

        for (std::size_t a = 0; a < cfg.n1_list.size(); ++a) {
            const int n1 = cfg.n1_list[a];
            for (std::size_t b = 0; b < cfg.n2_list.size(); ++b) {
                const int n2 = cfg.n2_list[b];
                const int blocks = std::min(cfg.blocks_per_rep, cfg.n_ref / n2);
                for (int blk = 0; blk < blocks; ++blk) {
                    const Dataset train_set =
                        n1 == 0 ? population
                                : resample(population, n1, derive_seed(base, kDraw, (std::uint64_t(rep) << 32) | blk));
                    TrainerConfig block_cfg = tc;
                    block_cfg.noise_particle_offset = blk * n2;
                    const ParticleCloud run = evolve(su.model, train_set, block_cfg, block(init, blk * n2, n2));
                    const double dist = paired_distance(run, block(reference, blk * n2, n2));
                    mse[a * cfg.n2_list.size() + b].push_back(dist * dist);
                }
            }
        }
    }

    StudyReport report;
    report.kind = "chaos";
    report.seed = su.trainer.seed;
    report.dataset_hash = hash;
    report.config = setup_echo(su);
    report.config["n1_list"] = cfg.n1_list;
    report.config["n2_list"] = cfg.n2_list;
    report.config["n_ref"] = cfg.n_ref;
    report.config["population_size"] = cfg.population_size;
    report.config["repetitions"] = cfg.repetitions;
    report.config["blocks_per_rep"] = cfg.blocks_per_rep;

    SeriesTable table{"mse", {"n1", "n2", "inv_n1_plus_inv_n2", "mse", "mse_se"}, {}};
    std::vector<double> xs, ys;
    for (std::size_t a = 0; a < cfg.n1_list.size(); ++a)
        for (std::size_t b = 0; b < cfg.n2_list.size(); ++b) {
            const int n1 = cfg.n1_list[a], n2 = cfg.n2_list[b];
            const auto& v = mse[a * cfg.n2_list.size() + b];
            const double x = (n1 > 0 ? 1.0 / n1 : 0.0) + 1.0 / n2;
            const double m = mean(v);
            table.rows.push_back({double(n1), double(n2), x, m, standard_error(v)});
            if (n1 > 0) {
                xs.push_back(x);
                ys.push_back(m);
            }
        }
    report.tables.push_back(std::move(table));
    if (xs.size() >= 2) {
        report.fits.push_back(log_log_fit("mse_fit", "log(1/N1+1/N2)", "log(mse)", xs, ys));
        report.checks.push_back(
            Check::within("chaos_slope", report.fits.back().fit.slope, cfg.slope_lower, cfg.slope_upper));
    }
    report.wall_seconds = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Euler-Maruyama strong rate

StudyReport run_euler_study(const EulerStudyConfig& cfg) {
    const auto t0 = Clock::now();
    const StudySetup& su = cfg.setup;
    if (cfg.gamma_list.empty() || cfg.ref_divisor < 1 || !(cfg.final_s > 0.0))
        throw PreconditionError("euler study: invalid settings");
    for (std::size_t i = 1; i < cfg.gamma_list.size(); ++i)
        if (!(cfg.gamma_list[i] < cfg.gamma_list[i - 1])) throw PreconditionError("euler study: gammas must decrease");
    const double fine = cfg.gamma_list.back() / cfg.ref_divisor;
    auto iterations = [&](double gamma) {
        const long long m = std::llround(gamma / fine);
        const long long steps = std::llround(cfg.final_s / gamma);
        if (m < 1 || std::abs(m * fine - gamma) > 1e-9 * gamma || std::abs(steps * gamma - cfg.final_s) > 1e-9 * cfg.final_s)
            throw PreconditionError("euler study: incompatible schedule (final s and steps must be multiples)");
        return static_cast<int>(steps);
    };

    std::vector<std::vector<double>> mse(cfg.gamma_list.size());
    std::uint64_t hash = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t base = su.trainer.seed;
        const Dataset data = su.make_dataset(su.n_samples, derive_seed(base, kData, rep));
        if (rep == 0) hash = data.hash();
        const ParticleCloud init =
            cloud_init(su.n_particles, su.grid, su.model.dim_param, su.init, derive_seed(base, kInit, rep));
        TrainerConfig tc = su.trainer;
        tc.seed = derive_seed(base, kNoise, rep);
        tc.noise_fine_step = fine;
        tc.step_schedule = {fine};
        tc.n_iters = iterations(fine);
        const ParticleCloud reference = evolve(su.model, data, tc, init);
        for (std::size_t g = 0; g < cfg.gamma_list.size(); ++g) {
            tc.step_schedule = {cfg.gamma_list[g]};
            tc.n_iters = iterations(cfg.gamma_list[g]);
            const ParticleCloud run = evolve(su.model, data, tc, init);
            const double dist = paired_distance(run, reference);
            mse[g].push_back(dist * dist);
        }
    }

    StudyReport report;
    report.kind = "euler";
    report.seed = su.trainer.seed;
    report.dataset_hash = hash;
    report.config = setup_echo(su);
    report.config["gamma_list"] = cfg.gamma_list;
    report.config["gamma_ref"] = fine;
    report.config["final_s"] = cfg.final_s;
    report.config["repetitions"] = cfg.repetitions;

    SeriesTable table{"mse", {"gamma", "mse", "mse_se"}, {}};
    std::vector<double> xs, ys;
    for (std::size_t g = 0; g < cfg.gamma_list.size(); ++g) {
        const double m = mean(mse[g]);
        table.rows.push_back({cfg.gamma_list[g], m, standard_error(mse[g])});
        xs.push_back(cfg.gamma_list[g]);
        ys.push_back(m);
    }
    report.tables.push_back(std::move(table));
    const auto positive = std::count_if(ys.begin(), ys.end(), [](double v) { return v > 0.0; });
    if (positive >= 2) {
        report.fits.push_back(log_log_fit("mse_fit", "log(gamma)", "log(mse)", xs, ys));
        report.checks.push_back(
            Check::within("euler_slope", report.fits.back().fit.slope, cfg.slope_lower, cfg.slope_upper));
    }
    report.wall_seconds = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Contraction under synchronous coupling

StudyReport run_contraction_study(const ContractionStudyConfig& cfg) {
    const auto t0 = Clock::now();
    const StudySetup& su = cfg.setup;
    if (cfg.n_seeds < 1) throw PreconditionError("contraction study: need at least one seed");
    const std::uint64_t base = su.trainer.seed;
    const Dataset data = su.make_dataset(su.n_samples, derive_seed(base, kData, 0));
    const double s2k = su.trainer.sigma * su.trainer.sigma * su.trainer.prior.kappa;

    struct SeedRun {
        std::vector<CoupledPoint> series;
        double lipschitz = 0.0;
    };
    std::vector<SeedRun> runs(cfg.n_seeds);
    double lip = 0.0;
    for (int s = 0; s < cfg.n_seeds; ++s) {
        const ParticleCloud a = cloud_init(su.n_particles, su.grid, su.model.dim_param, su.init, derive_seed(base, kInit, s));
        const ParticleCloud b =
            cloud_init(su.n_particles, su.grid, su.model.dim_param, cfg.init_b, derive_seed(base, kInitB, s));
        TrainerConfig tc = su.trainer;
        tc.seed = derive_seed(base, kNoise, s);
        runs[s].series = coupled_pair_run(su.model, data, tc, a, b);
        const std::uint64_t ps = derive_seed(base, kProbe, s);
        runs[s].lipschitz = std::max(lipschitz_probe(su.model, data, a, cfg.lipschitz_probes, cfg.lipschitz_perturbation, ps),
                                     lipschitz_probe(su.model, data, b, cfg.lipschitz_probes, cfg.lipschitz_perturbation, ps + 1));
        lip = std::max(lip, runs[s].lipschitz);
    }

    StudyReport report;
    report.kind = "contraction";
    report.seed = base;
    report.dataset_hash = data.hash();
    report.config = setup_echo(su);
    report.config["n_seeds"] = cfg.n_seeds;
    report.config["init_b"] = {{"mean", cfg.init_b.mean}, {"std", cfg.init_b.std}};
    report.config["rate_factor"] = cfg.rate_factor;

    const double predicted = s2k - 4.0 * lip;
    SeriesTable series{"distance", {"seed", "iter", "s", "distance"}, {}};
    SeriesTable rates{"rates", {"seed", "slope", "slope_se", "rate", "predicted_rate", "ratio", "lipschitz"}, {}};
    int negative = 0;
    double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
    for (int s = 0; s < cfg.n_seeds; ++s) {
        std::vector<double> xs, ys;
        for (const auto& p : runs[s].series) {
            series.rows.push_back({double(s), double(p.iter), p.s, p.distance});
            const double sq = p.distance * p.distance;
            if (sq > cfg.fit_floor) {
                xs.push_back(p.s);
                ys.push_back(std::log(sq));
            }
        }
        double slope = 0.0, se = 0.0;
        if (xs.size() >= 2) {
            const LinearFit fit = fit_line(xs, ys);
            slope = fit.slope;
            se = fit.slope_se;
        }
        if (slope < 0.0) ++negative;
        const double rate = -slope;
        const double ratio = predicted > 0.0 ? rate / predicted : std::numeric_limits<double>::infinity();
        min_ratio = std::min(min_ratio, ratio);
        max_ratio = std::max(max_ratio, ratio);
        rates.rows.push_back({double(s), slope, se, rate, predicted, ratio, runs[s].lipschitz});
        if (s == 0) {
            FitRecord rec;
            rec.name = "log_distance_seed0";
            rec.x_label = "s";
            rec.y_label = "log(distance^2)";
            rec.x = xs;
            rec.y = ys;
            if (xs.size() >= 2) rec.fit = fit_line(xs, ys);
            report.fits.push_back(std::move(rec));
        }
    }
    report.tables.push_back(std::move(series));
    report.tables.push_back(std::move(rates));

    const double regime = lip > 0.0 ? s2k / (lip * std::max(1.0, su.grid.horizon())) : std::numeric_limits<double>::infinity();
    report.checks.push_back(Check::at_least("regime_sigma2kappa_over_L", regime, cfg.regime_factor));
    report.checks.push_back(Check::at_least("negative_slopes", negative, cfg.n_seeds));
    report.checks.push_back(Check::at_least("rate_ratio_min", min_ratio, 1.0 / cfg.rate_factor));
    report.checks.push_back(Check::at_most("rate_ratio_max", max_ratio, cfg.rate_factor));
    report.config["lipschitz_estimate"] = lip;
    report.wall_seconds = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Gibbs stationarity

std::vector<double> histogram_masses(std::span<const double> values, std::span<const double> edges) {
    if (edges.size() < 2) throw PreconditionError("histogram: need at least one bin");
    const std::size_t bins = edges.size() - 1;
    std::vector<double> counts(bins, 0.0);
    for (double v : values) {
        if (v < edges.front() || v > edges.back()) continue;
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        std::size_t b = static_cast<std::size_t>(std::distance(edges.begin(), it));
        b = b == 0 ? 0 : std::min(b - 1, bins - 1);
        counts[b] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(values.size());
    return counts;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionError("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

namespace {

std::vector<double> bin_masses_from_log_density(const std::function<double(double)>& log_q,
                                                std::span<const double> edges, int per_bin) {
    const std::size_t bins = edges.size() - 1;
    std::vector<double> grid, logs;
    for (std::size_t b = 0; b < bins; ++b)
        for (int q = 0; q < per_bin; ++q) grid.push_back(edges[b] + (edges[b + 1] - edges[b]) * q / per_bin);
    grid.push_back(edges.back());
    double top = -std::numeric_limits<double>::infinity();
    for (double a : grid) {
        logs.push_back(log_q(a));
        top = std::max(top, logs.back());
    }
    std::vector<double> dens(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) dens[i] = std::exp(logs[i] - top);
    std::vector<double> masses(bins, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        for (int q = 0; q < per_bin; ++q) {
            const std::size_t i = b * per_bin + q;
            masses[b] += 0.5 * (dens[i] + dens[i + 1]) * (grid[i + 1] - grid[i]);
        }
        total += masses[b];
    }
    for (double& m : masses) m /= total;
    return masses;
}

}  // namespace

std::vector<double> prior_bin_masses(const PriorSpec& prior, std::span<const double> edges, int per_bin) {
    return bin_masses_from_log_density(
        [&](double a) { return -prior.potential(std::span<const double>(&a, 1)); }, edges, per_bin);
}

std::vector<double> gibbs_bin_masses(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                     double sigma, const PriorSpec& prior, int node, std::span<const double> edges,
                                     int per_bin) {
    if (model.dim_param != 1) throw DimensionError("gibbs density: requires p = 1");
    if (!(sigma > 0.0)) throw PreconditionError("gibbs density: requires sigma > 0");
    const TimeGrid& grid = cloud.grid();
    if (node < 0 || node > grid.n_steps()) throw PreconditionError("gibbs density: node out of range");
    if (node == grid.n_steps()) return prior_bin_masses(prior, edges, per_bin);

    std::vector<TrajectoryPair> traj;
    for (int k = 0; k < data.size(); ++k) traj.push_back(solve_trajectories(model, cloud, data, k));
    const double t = grid.node(node);
    const int d = model.dim_state;
    std::vector<double> phi(d);
    // Data-averaged Hamiltonian at the node, with the same (x_l, p_{l+1}) pairing as the drift.
    auto h_avg = [&](double a) {
        const std::span<const double> av(&a, 1);
        double total = 0.0;
        for (int k = 0; k < data.size(); ++k) {
            const auto x = traj[k].x_path.row(node);
            const auto costate = traj[k].p_path.row(node + 1);
            const auto zeta = data.slice(k, node);
            model.phi(t, x, av, zeta, phi);
            double h = model.has_running_cost ? model.f(t, x, av, zeta) : 0.0;
            for (int i = 0; i < d; ++i) h += phi[i] * costate[i];
            total += h;
        }
        return total / data.size();
    };
    const double w = 2.0 / (sigma * sigma);
    return bin_masses_from_log_density(
        [&](double a) { return -prior.potential(std::span<const double>(&a, 1)) - w * h_avg(a); }, edges, per_bin);
}

StudyReport run_gibbs_check(const GibbsCheckConfig& cfg) {
    const auto t0 = Clock::now();
    const StudySetup& su = cfg.setup;
    if (su.model.dim_param != 1) throw DimensionError("gibbs check: requires p = 1");
    if (!(su.trainer.sigma > 0.0)) throw PreconditionError("gibbs check: requires sigma > 0");
    const std::uint64_t base = su.trainer.seed;
    const Dataset data = su.make_dataset(su.n_samples, derive_seed(base, kData, 0));
    const ParticleCloud init = cloud_init(su.n_particles, su.grid, 1, su.init, derive_seed(base, kInit, 0));
    TrainerConfig tc = su.trainer;
    tc.seed = derive_seed(base, kNoise, 0);

    const int burn_in = static_cast<int>(std::floor(cfg.burn_in_fraction * tc.n_iters));
    std::vector<ParticleCloud> snapshots;
    evolve(su.model, data, tc, init, [&](int iter, const ParticleCloud& c) {
        if (iter > burn_in && (iter - burn_in) % cfg.snapshot_every == 0) snapshots.push_back(c);
    });
    if (snapshots.empty()) throw PreconditionError("gibbs check: no snapshots after burn-in");

    StudyReport report;
    report.kind = "gibbs";
    report.seed = base;
    report.dataset_hash = data.hash();
    report.config = setup_echo(su);
    report.config["burn_in_iters"] = burn_in;
    report.config["snapshots"] = snapshots.size();
    report.config["bins"] = cfg.bins;

    SeriesTable tv_table{"tv", {"node", "tv_gibbs", "tv_prior"}, {}};
    SeriesTable hist_table{"histograms", {"node", "bin_left", "bin_right", "particles", "gibbs", "prior"}, {}};
    double worst = 0.0;
    for (int l = 0; l < su.grid.n_nodes(); ++l) {
        std::vector<double> pooled;
        for (const auto& c : snapshots)
            for (int i = 0; i < c.n_particles(); ++i) pooled.push_back(c.at(i, l)[0]);
        const auto [lo_it, hi_it] = std::minmax_element(pooled.begin(), pooled.end());
        const double width = std::max(*hi_it - *lo_it, 1e-12);
        const double lo = *lo_it - cfg.range_extension * width, hi = *hi_it + cfg.range_extension * width;
        std::vector<double> edges(cfg.bins + 1);
        for (int b = 0; b <= cfg.bins; ++b) edges[b] = lo + (hi - lo) * b / cfg.bins;

        const auto hist = histogram_masses(pooled, edges);
        std::vector<double> gibbs(cfg.bins, 0.0);
        for (const auto& c : snapshots) {
            const auto q = gibbs_bin_masses(su.model, c, data, tc.sigma, tc.prior, l, edges, cfg.quadrature_per_bin);
            for (int b = 0; b < cfg.bins; ++b) gibbs[b] += q[b] / static_cast<double>(snapshots.size());
        }
        const auto prior = prior_bin_masses(tc.prior, edges, cfg.quadrature_per_bin);
        const double tv_g = total_variation(hist, gibbs);
        const double tv_p = total_variation(hist, prior);
        worst = std::max(worst, tv_g);
        tv_table.rows.push_back({double(l), tv_g, tv_p});
        for (int b = 0; b < cfg.bins; ++b)
            hist_table.rows.push_back({double(l), edges[b], edges[b + 1], hist[b], gibbs[b], prior[b]});
    }
    report.tables.push_back(std::move(tv_table));
    report.tables.push_back(std::move(hist_table));
    report.checks.push_back(Check::at_most("max_tv_gibbs", worst, cfg.tv_threshold));
    report.wall_seconds = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Generalization gap

StudyReport run_generalization_study(const GeneralizationStudyConfig& cfg) {
    const auto t0 = Clock::now();
    const StudySetup& su = cfg.setup;
    if (cfg.n1_list.empty() || cfg.holdout_n < 1 || cfg.repetitions < 1)
        throw PreconditionError("generalization study: invalid settings");
    for (int n1 : cfg.n1_list)
        if (n1 < 0) throw PreconditionError("generalization study: N1 must be >= 0");
    const std::uint64_t base = su.trainer.seed;
    const Dataset holdout = su.make_dataset(cfg.holdout_n, derive_seed(base, kHoldout, 0));
    const ParticleCloud init = cloud_init(su.n_particles, su.grid, su.model.dim_param, su.init, derive_seed(base, kInit, 0));

    TrainerConfig tc = su.trainer;
    tc.seed = derive_seed(base, kNoise, 0);
    TrainerConfig ref_cfg = tc;
    if (cfg.reference_iters > 0) ref_cfg.n_iters = cfg.reference_iters;
    const ParticleCloud reference = evolve(su.model, holdout, ref_cfg, init);
    const double j_ref = objective_J(su.model, reference, holdout);

    std::vector<std::vector<double>> gap2(cfg.n1_list.size());
    std::vector<std::vector<double>> train_j(cfg.n1_list.size());
    for (std::size_t a = 0; a < cfg.n1_list.size(); ++a) {
        const int n1 = cfg.n1_list[a];
        const int reps = n1 == 0 ? 1 : cfg.repetitions;
        for (int rep = 0; rep < reps; ++rep) {
            const Dataset train_set =
                n1 == 0 ? holdout : su.make_dataset(n1, derive_seed(base, kData, (std::uint64_t(n1) << 32) | rep));
            const ParticleCloud trained = evolve(su.model, train_set, tc, init);
            const double gap = objective_J(su.model, trained, holdout) - j_ref;
            gap2[a].push_back(gap * gap);
            train_j[a].push_back(objective_J(su.model, trained, train_set));
        }
    }

    StudyReport report;
    report.kind = "generalization";
    report.seed = base;
    report.dataset_hash = holdout.hash();
    report.config = setup_echo(su);
    report.config["n1_list"] = cfg.n1_list;
    report.config["holdout_n"] = cfg.holdout_n;
    report.config["repetitions"] = cfg.repetitions;
    report.config["reference_iters"] = ref_cfg.n_iters;
    report.config["reference_J"] = j_ref;

    SeriesTable table{"gap", {"n1", "inv_n1", "gap2", "gap2_se", "train_J"}, {}};
    std::vector<double> xs, ys;
    for (std::size_t a = 0; a < cfg.n1_list.size(); ++a) {
        const int n1 = cfg.n1_list[a];
        const double m = mean(gap2[a]);
        table.rows.push_back({double(n1), n1 > 0 ? 1.0 / n1 : 0.0, m, standard_error(gap2[a]), mean(train_j[a])});
        if (n1 > 0) {
            xs.push_back(1.0 / n1);
            ys.push_back(m);
        }
    }
    report.tables.push_back(std::move(table));
    if (xs.size() >= 2) {
        report.fits.push_back(log_log_fit("gap_fit", "log(1/N1)", "log(gap^2)", xs, ys));
        report.checks.push_back(
            Check::within("generalization_slope", report.fits.back().fit.slope, cfg.slope_lower, cfg.slope_upper));
    }
    report.wall_seconds = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Defaults

namespace {

RegressionSpec affine_target(int d) {
    RegressionSpec spec;
    spec.d = d;
    spec.box = 1.0;
    spec.target = [](std::span<const double> zeta, std::span<double> xi) {
        for (std::size_t i = 0; i < zeta.size(); ++i) xi[i] = 0.5 * zeta[i] + 1.0;
    };
    return spec;
}

TrainerConfig trainer(double sigma, double kappa, double step, int iters, std::uint64_t seed) {
    TrainerConfig tc;
    tc.sigma = sigma;
    tc.prior = gaussian_prior(kappa);
    tc.step_schedule = {step};
    tc.n_iters = iters;
    tc.seed = seed;
    return tc;
}

}  // namespace

ChaosStudyConfig default_chaos_config() {
    ChaosStudyConfig cfg;
    StudySetup& su = cfg.setup;
    su.model = make_quadratic_toy(1);
    su.grid = TimeGrid(1.0, 2);
    su.trainer = trainer(1.0, 4.0, 0.02, 100, 20240501);
    su.init = InitLaw::gaussian(0.0, 1.0);
    su.data = affine_target(1);
    su.echo["data_target"] = "affine(0.5, 1)";
    return cfg;
}

EulerStudyConfig default_euler_config() {
    EulerStudyConfig cfg;
    StudySetup& su = cfg.setup;
    su.model = make_builtin_model(BuiltinKind::neural_ode_tanh, 1, 2, 1);
    su.grid = TimeGrid(1.0, 4);
    su.trainer = trainer(1.0, 2.0, 1e-3, 0, 20240502);
    su.init = InitLaw::gaussian(0.0, 1.0);
    su.data = affine_target(1);
    su.n_particles = 16;
    su.n_samples = 8;
    su.echo["data_target"] = "affine(0.5, 1)";
    return cfg;
}

ContractionStudyConfig default_contraction_config() {
    ContractionStudyConfig cfg;
    StudySetup& su = cfg.setup;
    su.model = make_builtin_model(BuiltinKind::neural_ode_tanh, 1, 2, 1);
    su.grid = TimeGrid(1.0, 4);
    su.trainer = trainer(1.0, 100.0, 2e-3, 300, 20240503);
    su.trainer.record_every = 10;
    su.init = InitLaw::gaussian(0.0, 1.0);
    su.data = affine_target(1);
    su.n_particles = 32;
    su.n_samples = 16;
    su.echo["data_target"] = "affine(0.5, 1)";
    cfg.init_b = InitLaw::gaussian(1.0, 2.0);
    return cfg;
}

GibbsCheckConfig default_gibbs_config(bool drift_free) {
    GibbsCheckConfig cfg;
    StudySetup& su = cfg.setup;
    su.model = drift_free ? make_drift_free(1, 1) : make_quadratic_toy(1);
    su.grid = TimeGrid(1.0, 2);
    su.trainer = trainer(1.0, 1.0, 0.01, 1000, drift_free ? 20240504 : 20240505);
    su.init = InitLaw::gaussian(0.0, 1.0);
    su.data = affine_target(1);
    su.n_particles = 4096;
    su.n_samples = drift_free ? 1 : 16;
    su.echo["data_target"] = "affine(0.5, 1)";
    cfg.tv_threshold = drift_free ? 0.08 : 0.1;
    return cfg;
}

GeneralizationStudyConfig default_generalization_config() {
    GeneralizationStudyConfig cfg;
    StudySetup& su = cfg.setup;
    su.model = make_quadratic_toy(1);
    su.grid = TimeGrid(1.0, 2);
    su.trainer = trainer(1.0, 4.0, 0.01, 300, 20240506);
    su.init = InitLaw::gaussian(0.0, 1.0);
    su.data = affine_target(1);
    su.n_particles = 128;
    su.echo["data_target"] = "affine(0.5, 1)";
    return cfg;
}

}  // namespace mfl
