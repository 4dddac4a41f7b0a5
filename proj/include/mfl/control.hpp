#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfl/grid.hpp"
#include "mfl/model.hpp"

namespace mfl {

/// Empirical relaxed control: N2 particles, each a path of parameter
/// vectors over the grid nodes. Storage is particle-major:
/// index ((i * n_nodes) + l) * p + c.
class ParticleCloud {
public:
    ParticleCloud(int n_particles, TimeGrid grid, int dim_param, std::uint64_t seed = 0);

    int n_particles() const noexcept { return n_particles_; }
    int n_nodes() const noexcept { return grid_.n_nodes(); }
    int dim_param() const noexcept { return dim_param_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::span<double> at(int i, int l) noexcept { return {data_.data() + offset(i, l), static_cast<std::size_t>(dim_param_)}; }
    std::span<const double> at(int i, int l) const noexcept {
        return {data_.data() + offset(i, l), static_cast<std::size_t>(dim_param_)};
    }
    std::vector<double>& raw() noexcept { return data_; }
    const std::vector<double>& raw() const noexcept { return data_; }

    /// First n particles (same grid, same seed tag).
    ParticleCloud head(int n) const;

    /// (1/N2) sum_i sum_{l<n} |theta^i_l|^2 dt.
    double second_moment() const;
    bool all_finite() const;
    bool same_shape(const ParticleCloud& other) const;

    friend bool operator==(const ParticleCloud& a, const ParticleCloud& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    std::size_t offset(int i, int l) const noexcept {
        return (static_cast<std::size_t>(i) * grid_.n_nodes() + l) * dim_param_;
    }

    int n_particles_;
    TimeGrid grid_;
    int dim_param_;
    std::uint64_t seed_;
    std::vector<double> data_;
};

struct InitLaw {
    enum class Kind { gaussian, constant };
    Kind kind = Kind::gaussian;
    double mean = 0.0;
    double std = 1.0;
    double value = 0.0;

    static InitLaw gaussian(double mean, double std) { return {Kind::gaussian, mean, std, 0.0}; }
    static InitLaw constant(double value) { return {Kind::constant, 0.0, 0.0, value}; }
};

/// Draw (i, l, c) is keyed by (seed, i, l, c), so the first n particles of a
/// larger cloud coincide with an n-particle cloud of the same seed.
ParticleCloud cloud_init(int n_particles, const TimeGrid& grid, int dim_param, const InitLaw& law,
                         std::uint64_t seed);

enum class W2Method { automatic, exact1d, hungarian, sliced };

struct CloudDistance {
    /// Integrated metric: sqrt(sum_{l<n} per_node[l]^2 dt).
    double w2T = 0.0;
    std::vector<double> per_node;
};

/// Per-node 2-Wasserstein distance between empirical marginals.
///
/// automatic picks exact1d for p = 1, hungarian for N2 <= 512, and sliced
/// with 64 projections otherwise. The sliced estimator is biased low and
/// only meant for diagnostics.
CloudDistance w2_distance(const ParticleCloud& a, const ParticleCloud& b, W2Method method = W2Method::automatic,
                          int n_projections = 64, std::uint64_t projection_seed = 0x5eed);

/// W2 between two equal-weight point sets in R^p via exact assignment.
/// Points are row-major (n x p).
double w2_assignment(std::span<const double> a, std::span<const double> b, int n, int p);

/// Minimum-cost perfect matching on an n x n row-major cost matrix.
/// Returns the column assigned to each row.
std::vector<int> solve_assignment(std::span<const double> cost, int n);

/// W2 between two 1-D empirical measures of equal size (sorted coupling).
double w2_sorted_1d(std::vector<double> a, std::vector<double> b);

/// Synchronous-coupling distance sqrt(sum_{l<n} dt (1/N2) sum_i |a^i_l - b^i_l|^2).
/// Upper bound on the integrated W2.
double paired_distance(const ParticleCloud& a, const ParticleCloud& b);
/// Same, restricted to the first n particles of each cloud.
double paired_distance_head(const ParticleCloud& a, const ParticleCloud& b, int n);

/// Kozachenko-Leonenko (k = 1) estimate of the relative entropy of the
/// node-l marginal with respect to gamma = exp(-U). Returns +inf when two
/// particles coincide.
double entropy_estimate(const ParticleCloud& cloud, int node, const PriorSpec& prior);

/// CSV with header "particle,node,coord,value", values at 17 significant
/// digits.
void write_cloud_csv(std::ostream& os, const ParticleCloud& cloud);
ParticleCloud read_cloud_csv(std::istream& is, const TimeGrid& grid);

/// Little-endian binary: magic "MFLC", int32 N2, n_steps, p, float64 T,
/// uint64 seed, then the raw particle-major doubles.
void write_cloud_binary(std::ostream& os, const ParticleCloud& cloud);
ParticleCloud read_cloud_binary(std::istream& is);

}  // namespace mfl
