#include "mfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "mfl/errors.hpp"
#include "mfl/rng.hpp"

namespace mfl {

Dataset::Dataset(int dim_state, int slice_width, int path_nodes, std::vector<DataSample> samples, std::string tag,
                 std::uint64_t seed)
    : dim_state_(dim_state),
      slice_width_(slice_width),
      path_nodes_(path_nodes),
      samples_(std::move(samples)),
      tag_(std::move(tag)),
      seed_(seed) {
    if (samples_.empty()) throw PreconditionError("dataset: need at least one sample");
    if (dim_state < 1 || slice_width < 0 || path_nodes < 0) throw DimensionError("dataset: invalid shape");
    const std::size_t zeta_len =
        static_cast<std::size_t>(slice_width) * static_cast<std::size_t>(path_nodes > 0 ? path_nodes : 1);
    for (const auto& s : samples_) {
        if (static_cast<int>(s.xi.size()) != dim_state || s.zeta.size() != zeta_len)
            throw DimensionError("dataset: sample shapes are not uniform");
    }
}

std::span<const double> Dataset::slice(int k, int l) const {
    const auto& z = sample(k).zeta;
    if (path_nodes_ == 0) return z;
    return {z.data() + static_cast<std::size_t>(l) * slice_width_, static_cast<std::size_t>(slice_width_)};
}

Dataset Dataset::subset(std::span<const int> indices, std::string tag) const {
    std::vector<DataSample> out;
    out.reserve(indices.size());
    for (int k : indices) {
        if (k < 0 || k >= size()) throw PreconditionError("dataset subset: index out of range");
        out.push_back(samples_[static_cast<std::size_t>(k)]);
    }
    return Dataset(dim_state_, slice_width_, path_nodes_, std::move(out), tag.empty() ? tag_ : std::move(tag), seed_);
}

Dataset Dataset::with_input_channels() const {
    if (path_valued()) throw PreconditionError("with_input_channels: static samples only");
    std::vector<DataSample> out = samples_;
    for (auto& s : out) s.zeta.insert(s.zeta.end(), s.xi.begin(), s.xi.end());
    return Dataset(dim_state_, slice_width_ + dim_state_, 0, std::move(out), tag_ + "+input", seed_);
}

std::uint64_t Dataset::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ull;
        }
    };
    const int shape[3] = {dim_state_, slice_width_, path_nodes_};
    mix(shape, sizeof shape);
    for (const auto& s : samples_) {
        mix(s.xi.data(), s.xi.size() * sizeof(double));
        mix(s.zeta.data(), s.zeta.size() * sizeof(double));
    }
    return h;
}

Dataset generate_regression(const RegressionSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw PreconditionError("generate_regression: need at least one sample");
    if (spec.d < 1 || !(spec.box > 0.0)) throw DimensionError("generate_regression: invalid shape");
    const KeyedRng rng(seed);
    std::vector<DataSample> samples(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        auto& s = samples[k];
        s.zeta.resize(spec.d);
        s.xi.resize(spec.d);
        for (int i = 0; i < spec.d; ++i)
            s.zeta[i] = spec.box * (2.0 * rng.uniform(Stream::data, static_cast<std::uint32_t>(k), i, 0) - 1.0);
        if (spec.target)
            spec.target(s.zeta, s.xi);
        else
            s.xi = s.zeta;
    }
    return Dataset(spec.d, spec.d, 0, std::move(samples), "regression", seed);
}

Dataset generate_timeseries(const TimeseriesSpec& spec, const TimeGrid& grid, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw PreconditionError("generate_timeseries: need at least one sample");
    const int d = spec.d;
    const int nodes = grid.n_nodes();
    std::vector<int> obs = spec.observation_nodes;
    if (obs.empty())
        for (int l = 0; l < nodes; ++l) obs.push_back(l);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i] < 0 || obs[i] >= nodes || (i > 0 && obs[i] <= obs[i - 1]))
            throw DimensionError("generate_timeseries: observation nodes must be increasing grid indices");
    }

    const KeyedRng rng(seed);
    const int width = 2 * d;
    std::vector<DataSample> samples(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) {
        auto& s = samples[k];
        s.zeta.assign(static_cast<std::size_t>(nodes) * width, 0.0);
        std::vector<double> amp(d), freq(d), phase(d);
        for (int i = 0; i < d; ++i) {
            const auto u = static_cast<std::uint32_t>(k);
            amp[i] = 0.5 + 0.5 * rng.uniform(Stream::data, u, i, 0);
            freq[i] = 1.0 + 2.0 * rng.uniform(Stream::data, u, i, 1);
            phase[i] = 2.0 * std::numbers::pi * rng.uniform(Stream::data, u, i, 2);
        }
        auto truth = [&](int l, int i) { return amp[i] * std::sin(freq[i] * grid.node(l) + phase[i]); };
        // Last observation carried forward; before the first observation use the first one.
        std::size_t next = 0;
        int held = obs.front();
        for (int l = 0; l < nodes; ++l) {
            while (next < obs.size() && obs[next] <= l) held = obs[next++];
            for (int i = 0; i < d; ++i) {
                s.zeta[static_cast<std::size_t>(l) * width + i] = truth(held, i);
                s.zeta[static_cast<std::size_t>(l) * width + d + i] = truth(l, i);
            }
        }
        s.xi.resize(d);
        for (int i = 0; i < d; ++i) s.xi[i] = truth(0, i);
    }
    return Dataset(d, width, nodes, std::move(samples), "timeseries", seed);
}

}  // namespace mfl
