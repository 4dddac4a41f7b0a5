// Assembly of the data-averaged Hamiltonian gradient. The OpenMP kernels
// and the serial reference share the per-sample and per-particle bodies, so
// every output entry is produced by the same sequence of floating-point
// operations regardless of how work is distributed.

#include <string>
#include <vector>

#include "mfl/errors.hpp"
#include "mfl/ode.hpp"

namespace mfl {
namespace {

struct SolveStatus {
    bool failed = false;
    std::string message;
};

void solve_one(const ModelSpec& model, const ParticleCloud& flow, const Dataset& data, int k,
               std::vector<TrajectoryPair>& out, std::vector<SolveStatus>& status) {
    try {
        out[k] = solve_trajectories(model, flow, data, k);
    } catch (const Error& e) {
        status[k] = {true, e.what()};
    }
}

void rethrow_first(const std::vector<SolveStatus>& status) {
    for (std::size_t k = 0; k < status.size(); ++k)
        if (status[k].failed)
            throw NonFiniteError("sample " + std::to_string(k) + ": " + status[k].message);
}

// drift at particle i of `at`, all nodes l < n; node n stays zero.
void particle_drift(const ModelSpec& model, const ParticleCloud& at, const Dataset& data,
                    const std::vector<TrajectoryPair>& traj, int i, ParticleCloud& drift, std::vector<double>& ja,
                    std::vector<double>& fa) {
    const TimeGrid& grid = at.grid();
    const int d = model.dim_state;
    const int p = model.dim_param;
    const double inv_n1 = 1.0 / data.size();
    for (int l = 0; l < grid.n_steps(); ++l) {
        const double t = grid.node(l);
        const auto theta = at.at(i, l);
        auto out = drift.at(i, l);
        for (int k = 0; k < data.size(); ++k) {
            const auto x = traj[k].x_path.row(l);
            const auto costate = traj[k].p_path.row(l + 1);
            const auto zeta = data.slice(k, l);
            model.grad_a_phi(t, x, theta, zeta, ja);
            for (int r = 0; r < d; ++r) {
                const double pr = costate[r];
                const double* row = ja.data() + static_cast<std::size_t>(r) * p;
                for (int c = 0; c < p; ++c) out[c] += row[c] * pr;
            }
            if (model.has_running_cost) {
                model.grad_a_f(t, x, theta, zeta, fa);
                for (int c = 0; c < p; ++c) out[c] += fa[c];
            }
        }
        for (int c = 0; c < p; ++c) out[c] *= inv_n1;
    }
}

ParticleCloud assemble(const ModelSpec& model, const ParticleCloud& flow, const ParticleCloud& at,
                       const Dataset& data, bool parallel) {
    check_compatible(model, flow, data);
    check_compatible(model, at, data);
    if (!(flow.grid() == at.grid())) throw DimensionError("drift: clouds use different grids");

    const int n1 = data.size();
    std::vector<TrajectoryPair> traj(n1);
    std::vector<SolveStatus> status(n1);
    ParticleCloud drift(at.n_particles(), at.grid(), at.dim_param(), at.seed());
    const std::size_t jsize = static_cast<std::size_t>(model.dim_state) * model.dim_param;

    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < n1; ++k) solve_one(model, flow, data, k, traj, status);
        rethrow_first(status);
#pragma omp parallel
        {
            std::vector<double> ja(jsize), fa(model.dim_param);
#pragma omp for schedule(static)
            for (int i = 0; i < at.n_particles(); ++i) particle_drift(model, at, data, traj, i, drift, ja, fa);
        }
    } else {
        for (int k = 0; k < n1; ++k) solve_one(model, flow, data, k, traj, status);
        rethrow_first(status);
        std::vector<double> ja(jsize), fa(model.dim_param);
        for (int i = 0; i < at.n_particles(); ++i) particle_drift(model, at, data, traj, i, drift, ja, fa);
    }
    return drift;
}

}  // namespace

ParticleCloud mean_field_drift(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, Exec exec) {
    return assemble(model, cloud, cloud, data, exec == Exec::parallel);
}

ParticleCloud mean_field_drift_serial(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data) {
    return assemble(model, cloud, cloud, data, false);
}

ParticleCloud frozen_flow_drift(const ModelSpec& model, const ParticleCloud& flow, const ParticleCloud& at,
                                const Dataset& data) {
    return assemble(model, flow, at, data, true);
}

}  // namespace mfl
