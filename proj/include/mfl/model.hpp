#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfl {

using ConstVec = std::span<const double>;
using MutVec = std::span<double>;

/// Controlled vector field, running cost and terminal cost with their
/// partial derivatives.
///
/// Matrix outputs are row-major: grad_x_phi writes d x d with
/// out[i * d + j] = d phi_i / d x_j, grad_a_phi writes d x p with
/// out[i * p + c] = d phi_i / d a_c. Output spans are fully overwritten.
///
/// The data argument of phi/f is the data slice at the current node; the
/// terminal cost receives the full data vector of the sample (for static
/// samples both are the same vector).
struct ModelSpec {
    using VectorMap = std::function<void(double t, ConstVec x, ConstVec a, ConstVec zeta, MutVec out)>;
    using ScalarMap = std::function<double(double t, ConstVec x, ConstVec a, ConstVec zeta)>;
    using TerminalMap = std::function<double(ConstVec x, ConstVec zeta)>;
    using TerminalGrad = std::function<void(ConstVec x, ConstVec zeta, MutVec out)>;

    std::string name;
    int dim_state = 0;
    int dim_param = 0;
    /// Width of the per-node data slice handed to phi/f.
    int dim_data = 0;

    VectorMap phi;
    VectorMap grad_x_phi;
    VectorMap grad_a_phi;
    ScalarMap f;
    VectorMap grad_x_f;
    VectorMap grad_a_f;
    TerminalMap g;
    TerminalGrad grad_x_g;

    /// False when f is identically zero; lets solvers skip the running-cost terms.
    bool has_running_cost = true;
};

/// h = phi . p + f together with its gradients in a and x.
struct HamiltonianEval {
    double value = 0.0;
    std::vector<double> grad_a;
    std::vector<double> grad_x;
};

HamiltonianEval hamiltonian(const ModelSpec& model, double t, ConstVec x, ConstVec costate, ConstVec a,
                            ConstVec zeta);

/// Strongly convex potential U with gamma = exp(-U) a probability density.
struct PriorSpec {
    double kappa = 1.0;
    std::function<double(ConstVec a)> potential;
    std::function<void(ConstVec a, MutVec out)> grad_potential;

    double log_density(ConstVec a) const { return -potential(a); }
};

/// U(a) = kappa |a|^2 / 2 + (p / 2) log(2 pi / kappa), i.e. gamma = N(0, I / kappa).
PriorSpec gaussian_prior(double kappa);

enum class BuiltinKind {
    one_layer_residual,
    neural_ode_tanh,
    timeseries_interp,
};

/// Built-in tanh architectures; each particle carries one block of
/// `hidden` neurons.
///
/// - one_layer_residual: phi = A1 tanh(A2 u), f = 0, g = |x - y|^2, with the
///   data vector laid out as (y, u), y the d-dim target and u the d-dim
///   network input; phi does not depend on the state. p = 2 d h.
/// - neural_ode_tanh: phi = A1 tanh(A2 x), f = 0, g = |x - y|^2 with y the
///   d-dim data vector. p = 2 d h.
/// - timeseries_interp: phi = A1 tanh(A2 x + A3 z1_t), f = |x - z2_t|^2,
///   g = 0, with the per-node slice (z1_t, z2_t) of widths dim_data and d.
///   p = 2 d h + h dim_data.
///
/// A1 is d x h, A2 is h x d, A3 is h x dim_data, packed row-major in that
/// order into the parameter vector.
ModelSpec make_builtin_model(BuiltinKind kind, int d, int hidden, int dim_data);

/// phi(x, a) = a (p = d), f = 0, g = |x - y|^2. Convex in the control.
ModelSpec make_quadratic_toy(int d);

/// phi = 0, f = 0, g = 0 with p parameters: the Langevin flow reduces to
/// sampling the prior.
ModelSpec make_drift_free(int d, int p);

struct SelfCheckEntry {
    std::string field;
    double max_rel_error = 0.0;
    bool passed = true;
};

struct SelfCheckReport {
    std::vector<SelfCheckEntry> entries;
    double threshold = 1e-4;
    bool passed() const;
    double max_error() const;
};

/// Compares every derivative map against central differences (step 1e-4)
/// on random probes. Relative error is |analytic - fd| / max(1, |fd|)
/// per component.
SelfCheckReport model_grad_selfcheck(const ModelSpec& model, int n_probes, std::uint64_t seed,
                                     double threshold = 1e-4);

}  // namespace mfl
