#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/model.hpp"
#include "mfl/ode.hpp"

namespace mfl {

struct TrainerConfig {
    double sigma = 0.0;
    PriorSpec prior = gaussian_prior(1.0);
    /// Training-time increments s_{l+1} - s_l. A single entry means a uniform
    /// step; otherwise entry l is used at iteration l.
    std::vector<double> step_schedule{1e-3};
    int n_iters = 0;
    std::uint64_t seed = 0;
    int record_every = 1;
    /// When positive, Brownian increments are sums of standard increments on
    /// this finer uniform s-grid, so runs with different (multiple) step
    /// sizes discretize the same Brownian path.
    double noise_fine_step = 0.0;
    /// Estimate J^sigma at recorded iterates (needs N2 >= 8).
    bool record_jsigma = false;
    /// Particle i draws the Brownian increments of particle i + offset, so a
    /// small cloud can be coupled to any block of a larger one.
    int noise_particle_offset = 0;
    Exec exec = Exec::parallel;

    double step(int iter) const;
    /// s-time before iteration `iter` (sum of the first `iter` increments).
    double s_time(int iter) const;
    void validate() const;
};

/// Brownian increment sigma * (B_{s_{l+1}} - B_{s_l}) / sigma for particle i,
/// node l, coordinate c at iteration `iter`; i.e. an N(0, step) variate.
double brownian_increment(const TrainerConfig& cfg, int iter, int particle, int node, int coord);

/// Applies one Euler-Maruyama update given a precomputed Hamiltonian gradient:
///   theta <- theta - step (drift + sigma^2/2 grad U(theta)) + sigma dB.
void apply_langevin_update(ParticleCloud& cloud, const ParticleCloud& drift, const TrainerConfig& cfg, int iter);

ParticleCloud langevin_step(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                            const TrainerConfig& cfg, int iter);

struct HistoryRecord {
    int iter = 0;
    double s = 0.0;
    double j = 0.0;
    std::optional<double> j_sigma;
    /// sqrt(sum_{l<n} dt (1/N2) sum_i |drift^i_l|^2).
    double grad_norm = 0.0;
    double second_moment = 0.0;
};

struct TrainHistory {
    std::vector<HistoryRecord> records;
};

/// Columns "iter,s,J,Jsigma,grad_norm,second_moment"; Jsigma empty when absent.
void write_history_csv(std::ostream& os, const TrainHistory& history);

struct TrainResult {
    ParticleCloud cloud;
    TrainHistory history;
};

using IterateCallback = std::function<void(int iter, const ParticleCloud& cloud)>;

/// Runs cfg.n_iters Langevin steps. History is recorded at iteration 0,
/// every record_every iterations and at the end. `on_iterate`, when set, sees
/// the cloud after each completed iteration.
TrainResult train(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg, const ParticleCloud& init,
                  const IterateCallback& on_iterate = {});

struct CoupledPoint {
    int iter = 0;
    double s = 0.0;
    double distance = 0.0;
};

/// Evolves two clouds with identical noise keys and records their paired
/// distance at iteration 0, every record_every iterations and at the end.
std::vector<CoupledPoint> coupled_pair_run(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg,
                                           const ParticleCloud& init_a, const ParticleCloud& init_b);

/// Empirical Lipschitz constant of the Hamiltonian gradient: the max over
/// probes of |drift(a') - drift(a)| / |a' - a| in the paired L2 norm, with
/// a a random cloud around `center` and a' a random perturbation of it.
double lipschitz_probe(const ModelSpec& model, const Dataset& data, const ParticleCloud& center, int n_probes,
                       double perturbation, std::uint64_t seed);

struct PicardResult {
    ParticleCloud cloud;
    /// distances[k] = max over recorded s of the paired distance between
    /// Picard iterates k and k + 1 (first N2 particles).
    std::vector<double> distances;
};

/// Fixed-point iteration on measure flows. Starting from the constant flow
/// equal to `init` (extended to n_ref particles by cycling its particles), each
/// iteration re-simulates n_ref particles for cfg.n_iters steps with the
/// Hamiltonian gradient taken against the frozen previous flow, using the
/// same initial particles and noise every time. Returns the first N2
/// particles at the final s.
PicardResult picard_solve(const ModelSpec& model, const Dataset& data, const TrainerConfig& cfg,
                          const ParticleCloud& init, int n_picard, int n_ref);

}  // namespace mfl
