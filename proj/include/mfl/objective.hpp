#pragma once

#include <optional>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/model.hpp"
#include "mfl/ode.hpp"

namespace mfl {

struct ObjectiveValue {
    double j = 0.0;
    /// sigma^2 / 2 * sum_{l<n} Ent(nu_l) dt; empty at sigma = 0 or when the
    /// entropy estimate is undefined.
    std::optional<double> ent_term;
    double j_sigma = 0.0;
    bool entropy_undefined = false;
};

/// (1/N1) sum_k [ sum_{l<n} dt (1/N2) sum_i f(t_l, x^k_l, theta^i_l, zeta^k_l) + g(x^k_n, zeta^k) ].
double objective_J(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                   Exec exec = Exec::parallel);

/// Per-sample costs in dataset order.
std::vector<double> per_sample_cost(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                    Exec exec = Exec::parallel);

ObjectiveValue objective_Jsigma(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                double sigma, const PriorSpec& prior);

/// Exact gradient of objective_J w.r.t. every particle coordinate,
/// (dt / N2) * mean_field_drift.
ParticleCloud discrete_gradient(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                Exec exec = Exec::parallel);

/// Central differences of objective_J, one coordinate at a time.
ParticleCloud finite_diff_gradient(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                   double step);

}  // namespace mfl
