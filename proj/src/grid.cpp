#include "mfl/grid.hpp"

#include <cmath>

#include "mfl/errors.hpp"

namespace mfl {

TimeGrid::TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw PreconditionError("time grid: horizon must be positive");
    if (n_steps < 1) throw PreconditionError("time grid: n_steps must be >= 1");
}

TimeGrid TimeGrid::from_nodes(std::span<const double> nodes) {
    if (nodes.size() < 2) throw PreconditionError("time grid: need at least two nodes");
    if (nodes.front() != 0.0) throw PreconditionError("time grid: first node must be 0");
    const int n = static_cast<int>(nodes.size()) - 1;
    const double horizon = nodes.back();
    TimeGrid grid(horizon, n);
    for (int l = 0; l <= n; ++l) {
        if (l > 0 && !(nodes[l] > nodes[l - 1])) throw PreconditionError("time grid: nodes must increase");
        if (std::abs(nodes[l] - grid.node(l)) > 1e-12 * horizon)
            throw PreconditionError("time grid: only uniform grids are supported");
    }
    return grid;
}

std::vector<double> TimeGrid::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(n_nodes()));
    for (int l = 0; l <= n_steps_; ++l) out[l] = node(l);
    return out;
}

}  // namespace mfl
