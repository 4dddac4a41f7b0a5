#pragma once

#include <cstdint>
#include <vector>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/langevin.hpp"
#include "mfl/model.hpp"
#include "mfl/report.hpp"

namespace mfl {

/// Settings shared by every study: model, layer grid, trainer, particle
/// initialization and the data generator.
struct StudySetup {
    ModelSpec model;
    TimeGrid grid{1.0, 4};
    TrainerConfig trainer;
    InitLaw init = InitLaw::gaussian(0.0, 1.0);
    RegressionSpec data;
    int n_particles = 32;
    int n_samples = 16;
    /// Regression data is routed through with_input_channels() (needed by
    /// one_layer_residual).
    bool input_channels = false;
    nlohmann::json echo;

    Dataset make_dataset(int n, std::uint64_t seed) const;
};

/// Propagation of chaos. The data law M is the empirical measure of a base
/// sample of `population_size` points; each studied run trains N2 particles
/// on N1 i.i.d. draws from M and is compared to an n_ref-particle run on M
/// itself, sharing initial particles and noise keys with one block of N2
/// reference particles. Each repetition uses up to blocks_per_rep disjoint
/// blocks, each with its own draw. An entry N1 = 0 means "train on M itself".
struct ChaosStudyConfig {
    StudySetup setup;
    std::vector<int> n2_list{16, 32, 64, 128};
    std::vector<int> n1_list{8, 32, 128};
    int n_ref = 2048;
    int population_size = 256;
    int repetitions = 24;
    int blocks_per_rep = 8;
    double slope_lower = 0.7;
    double slope_upper = 1.3;
};

/// Strong error of Euler-Maruyama in the training time. Every run sums its
/// Brownian increments from the same fine grid of step min(gamma)/ref_divisor,
/// and is compared with the run at that fine step.
struct EulerStudyConfig {
    StudySetup setup;
    std::vector<double> gamma_list{4e-3, 2e-3, 1e-3, 5e-4};
    int ref_divisor = 8;
    double final_s = 0.5;
    int repetitions = 4;
    double slope_lower = 1.6;
    double slope_upper = 2.4;
};

/// Synchronous-coupling contraction between clouds started from two laws.
struct ContractionStudyConfig {
    StudySetup setup;
    InitLaw init_b = InitLaw::gaussian(1.0, 2.0);
    int n_seeds = 20;
    int lipschitz_probes = 16;
    double lipschitz_perturbation = 1e-3;
    /// Points with squared distance below this floor are excluded from the fit.
    double fit_floor = 1e-20;
    double rate_factor = 3.0;
    /// Required sigma^2 kappa / (L max(1, T)).
    double regime_factor = 10.0;
};

/// Stationary law against the self-consistent Gibbs density, p = 1.
struct GibbsCheckConfig {
    StudySetup setup;
    double burn_in_fraction = 0.5;
    int snapshot_every = 50;
    int bins = 64;
    /// Histogram range is [min, max] widened by this fraction of the width on each side.
    double range_extension = 0.1;
    int quadrature_per_bin = 16;
    double tv_threshold = 0.08;
};

/// Generalization gap: trained on N1 fresh samples, scored on a holdout of
/// holdout_n samples against a reference trained on the holdout itself with
/// the same particles and noise. An entry N1 = 0 trains on the holdout.
struct GeneralizationStudyConfig {
    StudySetup setup;
    std::vector<int> n1_list{8, 16, 32, 64};
    int holdout_n = 4096;
    int repetitions = 96;
    /// Iterations of the reference run; 0 means setup.trainer.n_iters.
    int reference_iters = 0;
    double slope_lower = 0.6;
    double slope_upper = 1.4;
};

StudyReport run_chaos_study(const ChaosStudyConfig& cfg);
StudyReport run_euler_study(const EulerStudyConfig& cfg);
StudyReport run_contraction_study(const ContractionStudyConfig& cfg);
StudyReport run_gibbs_check(const GibbsCheckConfig& cfg);
StudyReport run_generalization_study(const GeneralizationStudyConfig& cfg);

/// Gibbs density q(a) ~ exp(-U(a) - (2 / sigma^2) h_l(a, cloud)) for p = 1,
/// integrated over each bin of `edges` by trapezoid quadrature on
/// `per_bin` sub-intervals and normalized over the covered range.
std::vector<double> gibbs_bin_masses(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                     double sigma, const PriorSpec& prior, int node, std::span<const double> edges,
                                     int per_bin);

/// Prior mass per bin, normalized over the covered range.
std::vector<double> prior_bin_masses(const PriorSpec& prior, std::span<const double> edges, int per_bin);

/// Normalized histogram of values over `edges` (values outside are dropped
/// from the counts but kept in the denominator).
std::vector<double> histogram_masses(std::span<const double> values, std::span<const double> edges);

double total_variation(std::span<const double> p, std::span<const double> q);

/// Defaults sized for the acceptance runs.
ChaosStudyConfig default_chaos_config();
EulerStudyConfig default_euler_config();
ContractionStudyConfig default_contraction_config();
GibbsCheckConfig default_gibbs_config(bool drift_free);
GeneralizationStudyConfig default_generalization_config();

}  // namespace mfl
