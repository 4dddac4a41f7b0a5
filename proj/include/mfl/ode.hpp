#pragma once

#include <span>
#include <vector>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/grid.hpp"
#include "mfl/model.hpp"

namespace mfl {

/// (n + 1) x d state or costate path, row l at node l.
struct Path {
    int n_nodes = 0;
    int dim = 0;
    std::vector<double> values;

    Path() = default;
    Path(int nodes, int d) : n_nodes(nodes), dim(d), values(static_cast<std::size_t>(nodes) * d, 0.0) {}
    std::span<double> row(int l) { return {values.data() + static_cast<std::size_t>(l) * dim, static_cast<std::size_t>(dim)}; }
    std::span<const double> row(int l) const {
        return {values.data() + static_cast<std::size_t>(l) * dim, static_cast<std::size_t>(dim)};
    }
};

struct TrajectoryPair {
    Path x_path;
    Path p_path;
    int sample_id = 0;
};

enum class ForwardScheme { euler, rk4 };

/// Forward state under the empirical control: explicit Euler
/// x_{l+1} = x_l + dt (1/N2) sum_j phi(t_l, x_l, theta^j_l, zeta_l).
/// RK4 (control and data frozen over each step) is for accuracy studies
/// only; gradients are always taken through the Euler map.
Path forward_solve(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, int sample,
                   ForwardScheme scheme = ForwardScheme::euler);

/// Discrete adjoint of the Euler map:
///   p_n = grad_x g(x_n, zeta),
///   p_l = p_{l+1} + dt (1/N2) sum_j [grad_x phi(t_l, x_l, theta^j_l)^T p_{l+1} + grad_x f(...)].
/// p_l is the exact derivative of the discrete per-sample cost w.r.t. x_l.
Path adjoint_solve(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, int sample,
                   const Path& x_path);

TrajectoryPair solve_trajectories(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, int sample);

enum class Exec { serial, parallel };

/// Gradient of the data-averaged Hamiltonian at every particle and node,
/// same layout as the cloud.
///
/// Node convention: the entry for layer l pairs x_l with p_{l+1}, the costate
/// flowing back into layer l through the Euler step:
///   drift[i, l] = (1/N1) sum_k [grad_a phi(t_l, x^k_l, theta^i_l, zeta^k_l)^T p^k_{l+1}
///                                + grad_a f(t_l, x^k_l, theta^i_l, zeta^k_l)],   l < n,
///   drift[i, n] = 0  (the terminal node parameters never act on the state).
/// With this convention (dt / N2) * drift is the exact gradient of the
/// discrete objective.
///
/// Both executions return bit-identical results: every entry is summed over k
/// in index order by a single thread.
ParticleCloud mean_field_drift(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                               Exec exec = Exec::parallel);

/// Single-threaded reference of mean_field_drift, kept for testing and benchmarks.
ParticleCloud mean_field_drift_serial(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data);

/// Drift against a frozen measure: trajectories are driven by `flow`, and
/// the Hamiltonian gradient is evaluated at the particles of `at`.
ParticleCloud frozen_flow_drift(const ModelSpec& model, const ParticleCloud& flow, const ParticleCloud& at,
                                const Dataset& data);

/// Checks that model, cloud and dataset dimensions agree.
void check_compatible(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data);

}  // namespace mfl
