#include "mfl/objective.hpp"

#include <cmath>
#include <limits>

#include "mfl/errors.hpp"

namespace mfl {

std::vector<double> per_sample_cost(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                    Exec exec) {
    check_compatible(model, cloud, data);
    const TimeGrid& grid = cloud.grid();
    const int n1 = data.size();
    std::vector<double> cost(n1, 0.0);
    std::vector<std::string> errors(n1);

    auto one = [&](int k) {
        try {
            const Path x = forward_solve(model, cloud, data, k);
            double running = 0.0;
            if (model.has_running_cost) {
                for (int l = 0; l < grid.n_steps(); ++l) {
                    const double t = grid.node(l);
                    const auto zeta = data.slice(k, l);
                    double layer = 0.0;
                    for (int i = 0; i < cloud.n_particles(); ++i) layer += model.f(t, x.row(l), cloud.at(i, l), zeta);
                    running += grid.dt() * layer / cloud.n_particles();
                }
            }
            cost[k] = running + model.g(x.row(grid.n_steps()), data.full(k));
        } catch (const Error& e) {
            errors[k] = e.what();
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < n1; ++k) one(k);
    } else {
        for (int k = 0; k < n1; ++k) one(k);
    }
    for (int k = 0; k < n1; ++k)
        if (!errors[k].empty()) throw NonFiniteError("sample " + std::to_string(k) + ": " + errors[k]);
    return cost;
}

double objective_J(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, Exec exec) {
    const auto cost = per_sample_cost(model, cloud, data, exec);
    double total = 0.0;
    for (double c : cost) total += c;
    return total / static_cast<double>(cost.size());
}

ObjectiveValue objective_Jsigma(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                double sigma, const PriorSpec& prior) {
    if (!(sigma >= 0.0)) throw PreconditionError("objective_Jsigma: sigma must be >= 0");
    ObjectiveValue out;
    out.j = objective_J(model, cloud, data);
    out.j_sigma = out.j;
    if (sigma == 0.0) return out;

    const TimeGrid& grid = cloud.grid();
    double ent = 0.0;
    for (int l = 0; l < grid.n_steps(); ++l) {
        const double e = entropy_estimate(cloud, l, prior);
        if (!std::isfinite(e)) {
            out.entropy_undefined = true;
            return out;
        }
        ent += e * grid.dt();
    }
    out.ent_term = 0.5 * sigma * sigma * ent;
    out.j_sigma = out.j + *out.ent_term;
    return out;
}

ParticleCloud discrete_gradient(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, Exec exec) {
    ParticleCloud grad = mean_field_drift(model, cloud, data, exec);
    const double scale = cloud.grid().dt() / cloud.n_particles();
    for (double& v : grad.raw()) v *= scale;
    return grad;
}

ParticleCloud finite_diff_gradient(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                   double step) {
    if (!(step > 0.0)) throw PreconditionError("finite_diff_gradient: step must be positive");
    ParticleCloud grad(cloud.n_particles(), cloud.grid(), cloud.dim_param(), cloud.seed());
    ParticleCloud probe = cloud;
    auto& raw = probe.raw();
    for (std::size_t q = 0; q < raw.size(); ++q) {
        const double keep = raw[q];
        raw[q] = keep + step;
        const double up = objective_J(model, probe, data);
        raw[q] = keep - step;
        const double down = objective_J(model, probe, data);
        raw[q] = keep;
        grad.raw()[q] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace mfl
