#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfl/grid.hpp"

namespace mfl {

struct DataSample {
    std::vector<double> xi;
    /// Static samples: one vector of width slice_width. Path samples:
    /// (n + 1) x slice_width, row l holding the slice at node l.
    std::vector<double> zeta;
};

/// Empirical data measure: N1 samples with uniform shapes.
class Dataset {
public:
    Dataset(int dim_state, int slice_width, int path_nodes, std::vector<DataSample> samples, std::string tag = {},
            std::uint64_t seed = 0);

    int size() const noexcept { return static_cast<int>(samples_.size()); }
    int dim_state() const noexcept { return dim_state_; }
    int slice_width() const noexcept { return slice_width_; }
    bool path_valued() const noexcept { return path_nodes_ > 0; }
    /// Node count of path samples, 0 for static samples.
    int path_nodes() const noexcept { return path_nodes_; }
    const std::string& tag() const noexcept { return tag_; }
    std::uint64_t seed() const noexcept { return seed_; }

    const DataSample& sample(int k) const { return samples_[static_cast<std::size_t>(k)]; }
    const std::vector<DataSample>& samples() const noexcept { return samples_; }
    std::span<const double> xi(int k) const { return sample(k).xi; }
    /// Data slice at node l (ignored for static samples).
    std::span<const double> slice(int k, int l) const;
    std::span<const double> full(int k) const { return sample(k).zeta; }

    /// Samples at the given indices, in that order (repeats allowed).
    Dataset subset(std::span<const int> indices, std::string tag = {}) const;
    /// Each sample's data vector becomes (zeta, xi): the layout expected by
    /// one_layer_residual.
    Dataset with_input_channels() const;

    /// FNV-1a over the raw sample bytes; recorded in study reports.
    std::uint64_t hash() const;

private:
    int dim_state_;
    int slice_width_;
    int path_nodes_;
    std::vector<DataSample> samples_;
    std::string tag_;
    std::uint64_t seed_;
};

/// Target map for regression data, xi = target(zeta).
using TargetFn = std::function<void(std::span<const double> zeta, std::span<double> xi)>;

struct RegressionSpec {
    int d = 1;
    /// Half-width of the uniform cube zeta is drawn from.
    double box = 1.0;
    TargetFn target;
};

struct TimeseriesSpec {
    int d = 1;
    /// Observation nodes (grid indices, increasing). Empty means every node.
    std::vector<int> observation_nodes;
};

/// zeta ~ U[-box, box]^d, xi = target(zeta). Identity target when unset.
Dataset generate_regression(const RegressionSpec& spec, int n_samples, std::uint64_t seed);

/// True path z2(t) = A sin(w t + c) per coordinate (amplitude, frequency and
/// phase drawn per sample); z1 is the piecewise-constant interpolation of
/// the observations of z2 at the observation nodes. Slice at node l is
/// (z1_l, z2_l); xi = z2(0).
Dataset generate_timeseries(const TimeseriesSpec& spec, const TimeGrid& grid, int n_samples, std::uint64_t seed);

}  // namespace mfl
