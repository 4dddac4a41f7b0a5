#pragma once

#include <span>
#include <vector>

namespace mfl {

/// Uniform layer-time grid 0 = t_0 < ... < t_n = T.
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps);

    /// Accepts explicit nodes but only if they are uniform to round-off;
    /// non-uniform partitions are rejected.
    static TimeGrid from_nodes(std::span<const double> nodes);

    double horizon() const noexcept { return horizon_; }
    int n_steps() const noexcept { return n_steps_; }
    int n_nodes() const noexcept { return n_steps_ + 1; }
    double dt() const noexcept { return horizon_ / n_steps_; }
    double node(int l) const noexcept { return l == n_steps_ ? horizon_ : l * dt(); }
    std::vector<double> nodes() const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_;
    int n_steps_;
};

}  // namespace mfl
