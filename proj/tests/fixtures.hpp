#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mfl/control.hpp"
#include "mfl/dataset.hpp"
#include "mfl/model.hpp"

namespace fx {

/// phi(x, a) = a x with d = p = 1, f = 0, g = |x - y|^2.
inline mfl::ModelSpec linear_growth() {
    mfl::ModelSpec m = mfl::make_quadratic_toy(1);
    m.name = "linear_growth";
    m.phi = [](double, mfl::ConstVec x, mfl::ConstVec a, mfl::ConstVec, mfl::MutVec out) { out[0] = a[0] * x[0]; };
    m.grad_x_phi = [](double, mfl::ConstVec, mfl::ConstVec a, mfl::ConstVec, mfl::MutVec out) { out[0] = a[0]; };
    m.grad_a_phi = [](double, mfl::ConstVec x, mfl::ConstVec, mfl::ConstVec, mfl::MutVec out) { out[0] = x[0]; };
    return m;
}

/// phi = 0, f = 1, g = 0.
inline mfl::ModelSpec unit_running_cost(int p = 1) {
    mfl::ModelSpec m = mfl::make_drift_free(1, p);
    m.name = "unit_running_cost";
    m.f = [](double, mfl::ConstVec, mfl::ConstVec, mfl::ConstVec) { return 1.0; };
    m.has_running_cost = true;
    return m;
}

/// Running cost |a|^2 on top of the tanh neural ODE, with a configurable
/// (possibly wrong) factor on its gradient.
inline mfl::ModelSpec tanh_with_param_cost(double grad_factor = 2.0) {
    mfl::ModelSpec m = mfl::make_builtin_model(mfl::BuiltinKind::neural_ode_tanh, 2, 3, 0);
    m.f = [](double, mfl::ConstVec, mfl::ConstVec a, mfl::ConstVec) {
        double s = 0.0;
        for (double v : a) s += v * v;
        return s;
    };
    m.grad_a_f = [grad_factor](double, mfl::ConstVec, mfl::ConstVec a, mfl::ConstVec, mfl::MutVec out) {
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = grad_factor * a[i];
    };
    m.has_running_cost = true;
    return m;
}

inline mfl::Dataset static_data(int d, const std::vector<std::vector<double>>& xi,
                                const std::vector<std::vector<double>>& zeta) {
    std::vector<mfl::DataSample> s;
    for (std::size_t k = 0; k < xi.size(); ++k) s.push_back({xi[k], zeta[k]});
    return mfl::Dataset(d, static_cast<int>(zeta.front().size()), 0, std::move(s));
}

inline mfl::ParticleCloud constant_cloud(int n, const mfl::TimeGrid& grid, int p, double v) {
    return mfl::cloud_init(n, grid, p, mfl::InitLaw::constant(v), 0);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace fx
