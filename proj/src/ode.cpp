#include "mfl/ode.hpp"

#include <cmath>
#include <string>

#include "mfl/errors.hpp"

namespace mfl {

void check_compatible(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data) {
    if (cloud.dim_param() != model.dim_param) throw DimensionError("cloud parameter width does not match the model");
    if (data.dim_state() != model.dim_state) throw DimensionError("dataset state width does not match the model");
    if (data.slice_width() != model.dim_data) throw DimensionError("dataset slice width does not match the model");
    if (data.path_valued() && data.path_nodes() != cloud.n_nodes())
        throw DimensionError("path-valued data and cloud use different grids");
}

namespace {

bool finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// (1/N2) sum_j phi(t, x, theta^j_l, zeta) into out.
void averaged_field(const ModelSpec& model, const ParticleCloud& cloud, int l, double t, ConstVec x, ConstVec zeta,
                    MutVec out, MutVec scratch) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < cloud.n_particles(); ++j) {
        model.phi(t, x, cloud.at(j, l), zeta, scratch);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += scratch[i];
    }
    const double inv = 1.0 / cloud.n_particles();
    for (double& v : out) v *= inv;
}

}  // namespace

Path forward_solve(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, int sample,
                   ForwardScheme scheme) {
    check_compatible(model, cloud, data);
    const TimeGrid& grid = cloud.grid();
    const int d = model.dim_state;
    const double dt = grid.dt();
    Path x(grid.n_nodes(), d);
    const auto xi = data.xi(sample);
    std::copy(xi.begin(), xi.end(), x.row(0).begin());

    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d), scratch(d);
    for (int l = 0; l < grid.n_steps(); ++l) {
        const double t = grid.node(l);
        const auto zeta = data.slice(sample, l);
        const auto xl = x.row(l);
        auto next = x.row(l + 1);
        averaged_field(model, cloud, l, t, xl, zeta, k1, scratch);
        if (scheme == ForwardScheme::euler) {
            for (int i = 0; i < d; ++i) next[i] = xl[i] + dt * k1[i];
        } else {
            for (int i = 0; i < d; ++i) tmp[i] = xl[i] + 0.5 * dt * k1[i];
            averaged_field(model, cloud, l, t + 0.5 * dt, tmp, zeta, k2, scratch);
            for (int i = 0; i < d; ++i) tmp[i] = xl[i] + 0.5 * dt * k2[i];
            averaged_field(model, cloud, l, t + 0.5 * dt, tmp, zeta, k3, scratch);
            for (int i = 0; i < d; ++i) tmp[i] = xl[i] + dt * k3[i];
            averaged_field(model, cloud, l, t + dt, tmp, zeta, k4, scratch);
            for (int i = 0; i < d; ++i) next[i] = xl[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (!finite(next))
            throw NonFiniteError("forward_solve: non-finite state at node " + std::to_string(l + 1) + " of sample " +
                                 std::to_string(sample));
    }
    return x;
}

Path adjoint_solve(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data, int sample,
                   const Path& x_path) {
    check_compatible(model, cloud, data);
    const TimeGrid& grid = cloud.grid();
    const int d = model.dim_state;
    const int n = grid.n_steps();
    if (x_path.n_nodes != grid.n_nodes() || x_path.dim != d) throw DimensionError("adjoint_solve: x_path shape");
    const double dt = grid.dt();
    const double inv_n2 = 1.0 / cloud.n_particles();

    Path p(grid.n_nodes(), d);
    model.grad_x_g(x_path.row(n), data.full(sample), p.row(n));
    if (!finite(p.row(n)))
        throw NonFiniteError("adjoint_solve: non-finite terminal costate of sample " + std::to_string(sample));

    std::vector<double> jx(static_cast<std::size_t>(d) * d), fx(d), acc(d);
    for (int l = n - 1; l >= 0; --l) {
        const double t = grid.node(l);
        const auto zeta = data.slice(sample, l);
        const auto xl = x_path.row(l);
        const auto pn = p.row(l + 1);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int j = 0; j < cloud.n_particles(); ++j) {
            const auto theta = cloud.at(j, l);
            model.grad_x_phi(t, xl, theta, zeta, jx);
            for (int r = 0; r < d; ++r) {
                const double pr = pn[r];
                for (int c = 0; c < d; ++c) acc[c] += jx[static_cast<std::size_t>(r) * d + c] * pr;
            }
            if (model.has_running_cost) {
                model.grad_x_f(t, xl, theta, zeta, fx);
                for (int c = 0; c < d; ++c) acc[c] += fx[c];
            }
        }
        auto pl = p.row(l);
        for (int c = 0; c < d; ++c) pl[c] = pn[c] + dt * inv_n2 * acc[c];
        if (!finite(pl))
            throw NonFiniteError("adjoint_solve: non-finite costate at node " + std::to_string(l) + " of sample " +
                                 std::to_string(sample));
    }
    return p;
}

TrajectoryPair solve_trajectories(const ModelSpec& model, const ParticleCloud& cloud, const Dataset& data,
                                  int sample) {
    TrajectoryPair out;
    out.x_path = forward_solve(model, cloud, data, sample);
    out.p_path = adjoint_solve(model, cloud, data, sample, out.x_path);
    out.sample_id = sample;
    return out;
}

}  // namespace mfl
