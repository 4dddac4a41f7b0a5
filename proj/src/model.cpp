#include "mfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfl/errors.hpp"
#include "mfl/rng.hpp"

namespace mfl {

HamiltonianEval hamiltonian(const ModelSpec& model, double t, ConstVec x, ConstVec costate, ConstVec a,
                            ConstVec zeta) {
    const int d = model.dim_state;
    const int p = model.dim_param;
    if (static_cast<int>(x.size()) != d || static_cast<int>(costate.size()) != d)
        throw DimensionError("hamiltonian: state/costate width does not match the model");
    if (static_cast<int>(a.size()) != p) throw DimensionError("hamiltonian: parameter width does not match the model");
    if (static_cast<int>(zeta.size()) != model.dim_data)
        throw DimensionError("hamiltonian: data slice width does not match the model");

    std::vector<double> phi(d), jx(static_cast<std::size_t>(d) * d), ja(static_cast<std::size_t>(d) * p);
    std::vector<double> fx(d), fa(p);
    model.phi(t, x, a, zeta, phi);
    model.grad_x_phi(t, x, a, zeta, jx);
    model.grad_a_phi(t, x, a, zeta, ja);
    model.grad_x_f(t, x, a, zeta, fx);
    model.grad_a_f(t, x, a, zeta, fa);

    HamiltonianEval out;
    out.value = model.f(t, x, a, zeta);
    for (int i = 0; i < d; ++i) out.value += phi[i] * costate[i];
    out.grad_a = fa;
    for (int i = 0; i < d; ++i)
        for (int c = 0; c < p; ++c) out.grad_a[c] += ja[static_cast<std::size_t>(i) * p + c] * costate[i];
    out.grad_x = fx;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out.grad_x[j] += jx[static_cast<std::size_t>(i) * d + j] * costate[i];
    return out;
}

PriorSpec gaussian_prior(double kappa) {
    if (!(kappa > 0.0)) throw PreconditionError("gaussian prior: kappa must be positive");
    PriorSpec prior;
    prior.kappa = kappa;
    prior.potential = [kappa](ConstVec a) {
        double sq = 0.0;
        for (double v : a) sq += v * v;
        return 0.5 * kappa * sq + 0.5 * static_cast<double>(a.size()) * std::log(2.0 * std::numbers::pi / kappa);
    };
    prior.grad_potential = [kappa](ConstVec a, MutVec out) {
        for (std::size_t c = 0; c < a.size(); ++c) out[c] = kappa * a[c];
    };
    return prior;
}

namespace {

void zero(MutVec out) { std::fill(out.begin(), out.end(), 0.0); }

double squared_gap(ConstVec x, ConstVec y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return s;
}

// phi = A1 tanh(A2 x + A3 u). `input` selects where the pre-activation reads from.
struct TanhBlock {
    int d;
    int h;
    int n_in;      // width of the data input u (0 if none)
    bool uses_x;   // whether A2 multiplies the state
    int u_offset;  // position of u inside the data slice

    // Pre-activation z_j and the sources it depends on.
    void activations(ConstVec x, ConstVec a, ConstVec zeta, double* s, double* ds) const {
        const double* a2 = a.data() + d * h;
        const double* a3 = a2 + h * d;
        for (int j = 0; j < h; ++j) {
            double z = 0.0;
            if (uses_x) {
                for (int m = 0; m < d; ++m) z += a2[j * d + m] * x[m];
                for (int q = 0; q < n_in; ++q) z += a3[j * n_in + q] * zeta[u_offset + q];
            } else {
                for (int m = 0; m < d; ++m) z += a2[j * d + m] * zeta[u_offset + m];
            }
            s[j] = std::tanh(z);
            ds[j] = 1.0 - s[j] * s[j];
        }
    }

    int dim_param() const { return 2 * d * h + (uses_x ? h * n_in : 0); }
};

constexpr int kMaxHidden = 256;

ModelSpec tanh_model(std::string name, TanhBlock blk, int dim_data) {
    if (blk.h > kMaxHidden) throw PreconditionError("builtin model: hidden width too large");
    ModelSpec m;
    m.name = std::move(name);
    m.dim_state = blk.d;
    m.dim_param = blk.dim_param();
    m.dim_data = dim_data;

    m.phi = [blk](double, ConstVec x, ConstVec a, ConstVec zeta, MutVec out) {
        double s[kMaxHidden], ds[kMaxHidden];
        blk.activations(x, a, zeta, s, ds);
        for (int i = 0; i < blk.d; ++i) {
            double v = 0.0;
            for (int j = 0; j < blk.h; ++j) v += a[i * blk.h + j] * s[j];
            out[i] = v;
        }
    };
    m.grad_x_phi = [blk](double, ConstVec x, ConstVec a, ConstVec zeta, MutVec out) {
        if (!blk.uses_x) {
            zero(out);
            return;
        }
        double s[kMaxHidden], ds[kMaxHidden];
        blk.activations(x, a, zeta, s, ds);
        const double* a2 = a.data() + blk.d * blk.h;
        for (int i = 0; i < blk.d; ++i)
            for (int m2 = 0; m2 < blk.d; ++m2) {
                double v = 0.0;
                for (int j = 0; j < blk.h; ++j) v += a[i * blk.h + j] * ds[j] * a2[j * blk.d + m2];
                out[i * blk.d + m2] = v;
            }
    };
    m.grad_a_phi = [blk](double, ConstVec x, ConstVec a, ConstVec zeta, MutVec out) {
        double s[kMaxHidden], ds[kMaxHidden];
        blk.activations(x, a, zeta, s, ds);
        zero(out);
        const int p = blk.dim_param();
        const int d = blk.d, h = blk.h;
        for (int i = 0; i < d; ++i) {
            double* row = out.data() + i * p;
            for (int j = 0; j < h; ++j) {
                row[i * h + j] = s[j];
                const double w = a[i * h + j] * ds[j];
                for (int m2 = 0; m2 < d; ++m2)
                    row[d * h + j * d + m2] = w * (blk.uses_x ? x[m2] : zeta[blk.u_offset + m2]);
                if (blk.uses_x)
                    for (int q = 0; q < blk.n_in; ++q)
                        row[2 * d * h + j * blk.n_in + q] = w * zeta[blk.u_offset + q];
            }
        }
    };
    return m;
}

void set_terminal_regression(ModelSpec& m) {
    const int d = m.dim_state;
    m.f = [](double, ConstVec, ConstVec, ConstVec) { return 0.0; };
    m.grad_x_f = [](double, ConstVec, ConstVec, ConstVec, MutVec out) { zero(out); };
    m.grad_a_f = [](double, ConstVec, ConstVec, ConstVec, MutVec out) { zero(out); };
    m.g = [d](ConstVec x, ConstVec zeta) { return squared_gap(x, zeta.first(d)); };
    m.grad_x_g = [d](ConstVec x, ConstVec zeta, MutVec out) {
        for (int i = 0; i < d; ++i) out[i] = 2.0 * (x[i] - zeta[i]);
    };
    m.has_running_cost = false;
}

}  // namespace

ModelSpec make_builtin_model(BuiltinKind kind, int d, int hidden, int dim_data) {
    if (d < 1 || hidden < 1) throw PreconditionError("builtin model: dimensions must be positive");
    switch (kind) {
        case BuiltinKind::one_layer_residual: {
            // data slice = (y, u), both of width d
            ModelSpec m = tanh_model("one_layer_residual", TanhBlock{d, hidden, 0, false, d}, 2 * d);
            set_terminal_regression(m);
            return m;
        }
        case BuiltinKind::neural_ode_tanh: {
            ModelSpec m = tanh_model("neural_ode_tanh", TanhBlock{d, hidden, 0, true, 0}, d);
            set_terminal_regression(m);
            return m;
        }
        case BuiltinKind::timeseries_interp: {
            if (dim_data < 1) throw PreconditionError("timeseries_interp: dim_data must be >= 1");
            // data slice = (z1 observed, z2 true)
            ModelSpec m = tanh_model("timeseries_interp", TanhBlock{d, hidden, dim_data, true, 0}, dim_data + d);
            const int off = dim_data;
            m.f = [d, off](double, ConstVec x, ConstVec, ConstVec zeta) { return squared_gap(x, zeta.subspan(off, d)); };
            m.grad_x_f = [d, off](double, ConstVec x, ConstVec, ConstVec zeta, MutVec out) {
                for (int i = 0; i < d; ++i) out[i] = 2.0 * (x[i] - zeta[off + i]);
            };
            m.grad_a_f = [](double, ConstVec, ConstVec, ConstVec, MutVec out) { zero(out); };
            m.g = [](ConstVec, ConstVec) { return 0.0; };
            m.grad_x_g = [](ConstVec, ConstVec, MutVec out) { zero(out); };
            m.has_running_cost = true;
            return m;
        }
    }
    throw PreconditionError("builtin model: unknown kind");
}

ModelSpec make_quadratic_toy(int d) {
    if (d < 1) throw PreconditionError("quadratic toy: d must be positive");
    ModelSpec m;
    m.name = "quadratic_toy";
    m.dim_state = d;
    m.dim_param = d;
    m.dim_data = d;
    m.phi = [](double, ConstVec, ConstVec a, ConstVec, MutVec out) { std::copy(a.begin(), a.end(), out.begin()); };
    m.grad_x_phi = [](double, ConstVec, ConstVec, ConstVec, MutVec out) { zero(out); };
    m.grad_a_phi = [d](double, ConstVec, ConstVec, ConstVec, MutVec out) {
        zero(out);
        for (int i = 0; i < d; ++i) out[i * d + i] = 1.0;
    };
    set_terminal_regression(m);
    return m;
}

ModelSpec make_drift_free(int d, int p) {
    if (d < 1 || p < 1) throw PreconditionError("drift-free model: dimensions must be positive");
    ModelSpec m;
    m.name = "drift_free";
    m.dim_state = d;
    m.dim_param = p;
    m.dim_data = d;
    m.phi = [](double, ConstVec, ConstVec, ConstVec, MutVec out) { zero(out); };
    m.grad_x_phi = m.phi;
    m.grad_a_phi = m.phi;
    m.f = [](double, ConstVec, ConstVec, ConstVec) { return 0.0; };
    m.grad_x_f = m.phi;
    m.grad_a_f = m.phi;
    m.g = [](ConstVec, ConstVec) { return 0.0; };
    m.grad_x_g = [](ConstVec, ConstVec, MutVec out) { zero(out); };
    m.has_running_cost = false;
    return m;
}

bool SelfCheckReport::passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const SelfCheckEntry& e) { return e.passed; });
}

double SelfCheckReport::max_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
}

namespace {

double rel_err(double analytic, double fd) { return std::abs(analytic - fd) / std::max(1.0, std::abs(fd)); }

}  // namespace

SelfCheckReport model_grad_selfcheck(const ModelSpec& model, int n_probes, std::uint64_t seed, double threshold) {
    if (n_probes < 1) throw PreconditionError("model_grad_selfcheck: n_probes must be >= 1");
    const int d = model.dim_state, p = model.dim_param, w = model.dim_data;
    constexpr double h = 1e-4;
    const KeyedRng rng(seed);

    double e_xphi = 0, e_aphi = 0, e_xf = 0, e_af = 0, e_xg = 0;
    std::vector<double> x(d), a(p), z(w), phi_p(d), phi_m(d), jx(d * d), ja(d * p), fx(d), fa(p), gx(d);
    for (int probe = 0; probe < n_probes; ++probe) {
        const auto u = static_cast<std::uint32_t>(probe);
        const double t = rng.uniform(Stream::probe, u, 0, 0);
        for (int i = 0; i < d; ++i) x[i] = rng.normal(Stream::probe, u, 1, i);
        for (int c = 0; c < p; ++c) a[c] = rng.normal(Stream::probe, u, 2, c);
        for (int q = 0; q < w; ++q) z[q] = rng.normal(Stream::probe, u, 3, q);

        model.grad_x_phi(t, x, a, z, jx);
        model.grad_a_phi(t, x, a, z, ja);
        model.grad_x_f(t, x, a, z, fx);
        model.grad_a_f(t, x, a, z, fa);
        model.grad_x_g(x, z, gx);

        for (int m = 0; m < d; ++m) {
            const double keep = x[m];
            x[m] = keep + h;
            model.phi(t, x, a, z, phi_p);
            const double fp = model.f(t, x, a, z), gp = model.g(x, z);
            x[m] = keep - h;
            model.phi(t, x, a, z, phi_m);
            const double fm = model.f(t, x, a, z), gm = model.g(x, z);
            x[m] = keep;
            for (int i = 0; i < d; ++i) e_xphi = std::max(e_xphi, rel_err(jx[i * d + m], (phi_p[i] - phi_m[i]) / (2 * h)));
            e_xf = std::max(e_xf, rel_err(fx[m], (fp - fm) / (2 * h)));
            e_xg = std::max(e_xg, rel_err(gx[m], (gp - gm) / (2 * h)));
        }
        for (int c = 0; c < p; ++c) {
            const double keep = a[c];
            a[c] = keep + h;
            model.phi(t, x, a, z, phi_p);
            const double fp = model.f(t, x, a, z);
            a[c] = keep - h;
            model.phi(t, x, a, z, phi_m);
            const double fm = model.f(t, x, a, z);
            a[c] = keep;
            for (int i = 0; i < d; ++i) e_aphi = std::max(e_aphi, rel_err(ja[i * p + c], (phi_p[i] - phi_m[i]) / (2 * h)));
            e_af = std::max(e_af, rel_err(fa[c], (fp - fm) / (2 * h)));
        }
    }

    SelfCheckReport report;
    report.threshold = threshold;
    for (auto [name, err] : {std::pair{"grad_x_phi", e_xphi}, std::pair{"grad_a_phi", e_aphi},
                             std::pair{"grad_x_f", e_xf}, std::pair{"grad_a_f", e_af}, std::pair{"grad_x_g", e_xg}}) {
        const bool ok = std::isfinite(err) && err <= threshold;
        report.entries.push_back({name, err, ok});
    }
    return report;
}

}  // namespace mfl
