#include "mfl/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "mfl/errors.hpp"
#include "mfl/report.hpp"
#include "mfl/rng.hpp"

namespace mfl {

ParticleCloud::ParticleCloud(int n_particles, TimeGrid grid, int dim_param, std::uint64_t seed)
    : n_particles_(n_particles), grid_(grid), dim_param_(dim_param), seed_(seed) {
    if (n_particles < 1) throw PreconditionError("particle cloud: need at least one particle");
    if (dim_param < 1) throw DimensionError("particle cloud: dim_param must be positive");
    data_.assign(static_cast<std::size_t>(n_particles) * grid.n_nodes() * dim_param, 0.0);
}

ParticleCloud ParticleCloud::head(int n) const {
    if (n < 1 || n > n_particles_) throw PreconditionError("particle cloud head: invalid count");
    ParticleCloud out(n, grid_, dim_param_, seed_);
    std::copy_n(data_.begin(), out.data_.size(), out.data_.begin());
    return out;
}

double ParticleCloud::second_moment() const {
    double total = 0.0;
    const int n = grid_.n_steps();
    for (int i = 0; i < n_particles_; ++i)
        for (int l = 0; l < n; ++l)
            for (double v : at(i, l)) total += v * v;
    return total * grid_.dt() / n_particles_;
}

bool ParticleCloud::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool ParticleCloud::same_shape(const ParticleCloud& other) const {
    return n_particles_ == other.n_particles_ && dim_param_ == other.dim_param_ && grid_ == other.grid_;
}

ParticleCloud cloud_init(int n_particles, const TimeGrid& grid, int dim_param, const InitLaw& law,
                         std::uint64_t seed) {
    if (n_particles < 1) throw PreconditionError("cloud_init: n_particles must be >= 1");
    ParticleCloud cloud(n_particles, grid, dim_param, seed);
    if (law.kind == InitLaw::Kind::constant) {
        std::fill(cloud.raw().begin(), cloud.raw().end(), law.value);
        return cloud;
    }
    const KeyedRng rng(seed);
    for (int i = 0; i < n_particles; ++i)
        for (int l = 0; l < grid.n_nodes(); ++l) {
            auto theta = cloud.at(i, l);
            for (int c = 0; c < dim_param; ++c)
                theta[c] = law.mean + law.std * rng.normal(Stream::init, static_cast<std::uint32_t>(i), l, c);
        }
    return cloud;
}

double w2_sorted_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw PreconditionError("w2_sorted_1d: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double total = 0.0;
    if (a.size() == b.size()) {
        for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(total / static_cast<double>(a.size()));
    }
    // Quantile coupling: walk the merged breakpoints k/na and m/nb.
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double u = 0.0;
    while (i < a.size() && j < b.size()) {
        const double next = std::min((i + 1) / na, (j + 1) / nb);
        total += (next - u) * (a[i] - b[j]) * (a[i] - b[j]);
        u = next;
        if ((i + 1) / na <= next) ++i;
        if ((j + 1) / nb <= next) ++j;
    }
    return std::sqrt(total);
}

std::vector<int> solve_assignment(std::span<const double> cost, int n) {
    if (n < 1 || cost.size() != static_cast<std::size_t>(n) * n)
        throw DimensionError("solve_assignment: cost must be n x n");
    // Shortest augmenting paths with dual potentials; 1-based, column 0 is a sentinel.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int row = 1; row <= n; ++row) {
        match[0] = row;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
    return assignment;
}

double w2_assignment(std::span<const double> a, std::span<const double> b, int n, int p) {
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int c = 0; c < p; ++c) {
                const double diff = a[static_cast<std::size_t>(i) * p + c] - b[static_cast<std::size_t>(j) * p + c];
                s += diff * diff;
            }
            cost[static_cast<std::size_t>(i) * n + j] = s;
        }
    const auto match = solve_assignment(cost, n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + match[i]];
    return std::sqrt(total / n);
}

namespace {

std::vector<double> node_points(const ParticleCloud& cloud, int l) {
    const int p = cloud.dim_param();
    std::vector<double> pts(static_cast<std::size_t>(cloud.n_particles()) * p);
    for (int i = 0; i < cloud.n_particles(); ++i) std::copy_n(cloud.at(i, l).begin(), p, pts.begin() + i * p);
    return pts;
}

std::vector<double> project(const std::vector<double>& pts, std::span<const double> dir, int p) {
    const std::size_t n = pts.size() / p;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < p; ++c) s += pts[i * p + c] * dir[c];
        out[i] = s;
    }
    return out;
}

}  // namespace

CloudDistance w2_distance(const ParticleCloud& a, const ParticleCloud& b, W2Method method, int n_projections,
                          std::uint64_t projection_seed) {
    if (!(a.grid() == b.grid()) || a.dim_param() != b.dim_param())
        throw DimensionError("w2_distance: clouds must share grid and parameter width");
    const int p = a.dim_param();
    if (method == W2Method::automatic) {
        if (p == 1)
            method = W2Method::exact1d;
        else if (a.n_particles() == b.n_particles() && a.n_particles() <= 512)
            method = W2Method::hungarian;
        else
            method = W2Method::sliced;
    }
    if (method == W2Method::exact1d && p != 1) throw DimensionError("w2_distance: exact1d needs p = 1");
    if (method == W2Method::hungarian && a.n_particles() != b.n_particles())
        throw DimensionError("w2_distance: hungarian needs equal particle counts");
    if (method == W2Method::sliced && n_projections < 1) throw PreconditionError("w2_distance: need projections");

    std::vector<std::vector<double>> dirs;
    if (method == W2Method::sliced) {
        const KeyedRng rng(projection_seed);
        for (int k = 0; k < n_projections; ++k) {
            std::vector<double> dir(p);
            double norm = 0.0;
            for (int c = 0; c < p; ++c) {
                dir[c] = rng.normal(Stream::projection, static_cast<std::uint32_t>(k), c, 0);
                norm += dir[c] * dir[c];
            }
            for (double& v : dir) v /= std::sqrt(norm);
            dirs.push_back(std::move(dir));
        }
    }

    const int nodes = a.n_nodes();
    CloudDistance out;
    out.per_node.assign(nodes, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < nodes; ++l) {
        const auto pa = node_points(a, l);
        const auto pb = node_points(b, l);
        double w = 0.0;
        switch (method) {
            case W2Method::exact1d:
                w = w2_sorted_1d(pa, pb);
                break;
            case W2Method::hungarian:
                w = w2_assignment(pa, pb, a.n_particles(), p);
                break;
            case W2Method::sliced: {
                double sq = 0.0;
                for (const auto& dir : dirs) {
                    const double wk = w2_sorted_1d(project(pa, dir, p), project(pb, dir, p));
                    sq += wk * wk;
                }
                w = std::sqrt(sq / static_cast<double>(dirs.size()));
                break;
            }
            case W2Method::automatic:
                break;
        }
        out.per_node[l] = w;
    }
    double sq = 0.0;
    for (int l = 0; l + 1 < nodes; ++l) sq += out.per_node[l] * out.per_node[l] * a.grid().dt();
    out.w2T = std::sqrt(sq);
    return out;
}

double paired_distance_head(const ParticleCloud& a, const ParticleCloud& b, int n) {
    if (!(a.grid() == b.grid()) || a.dim_param() != b.dim_param() || n < 1 || n > a.n_particles() ||
        n > b.n_particles())
        throw DimensionError("paired_distance: shape mismatch");
    const int steps = a.grid().n_steps();
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < steps; ++l) {
            const auto x = a.at(i, l);
            const auto y = b.at(i, l);
            for (std::size_t c = 0; c < x.size(); ++c) total += (x[c] - y[c]) * (x[c] - y[c]);
        }
    return std::sqrt(total * a.grid().dt() / n);
}

double paired_distance(const ParticleCloud& a, const ParticleCloud& b) {
    if (a.n_particles() != b.n_particles()) throw DimensionError("paired_distance: particle counts differ");
    return paired_distance_head(a, b, a.n_particles());
}

double entropy_estimate(const ParticleCloud& cloud, int node, const PriorSpec& prior) {
    const int n = cloud.n_particles();
    const int p = cloud.dim_param();
    if (n < 8) throw PreconditionError("entropy_estimate: need at least 8 particles");
    if (node < 0 || node >= cloud.n_nodes()) throw PreconditionError("entropy_estimate: node out of range");

    const auto pts = node_points(cloud, node);
    std::vector<double> nn(n, std::numeric_limits<double>::infinity());
    if (p == 1) {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int x, int y) { return pts[x] < pts[y]; });
        for (int r = 0; r < n; ++r) {
            const int i = order[r];
            if (r > 0) nn[i] = std::min(nn[i], pts[i] - pts[order[r - 1]]);
            if (r + 1 < n) nn[i] = std::min(nn[i], pts[order[r + 1]] - pts[i]);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                double s = 0.0;
                for (int c = 0; c < p; ++c) {
                    const double diff = pts[static_cast<std::size_t>(i) * p + c] - pts[static_cast<std::size_t>(j) * p + c];
                    s += diff * diff;
                }
                best = std::min(best, s);
            }
            nn[i] = std::sqrt(best);
        }
    }

    double log_sum = 0.0, u_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(nn[i] > 0.0)) return std::numeric_limits<double>::infinity();
        log_sum += std::log(nn[i]);
        u_sum += prior.potential(std::span<const double>(pts.data() + static_cast<std::size_t>(i) * p, p));
    }
    // psi(N) - psi(1) = H_{N-1}
    double harmonic = 0.0;
    for (int k = 1; k < n; ++k) harmonic += 1.0 / k;
    const double half_p = 0.5 * p;
    const double log_unit_ball = half_p * std::log(std::numbers::pi) - std::lgamma(half_p + 1.0);
    const double diff_entropy = harmonic + log_unit_ball + p * log_sum / n;
    return -diff_entropy + u_sum / n;
}

void write_cloud_csv(std::ostream& os, const ParticleCloud& cloud) {
    os << "particle,node,coord,value\n";
    for (int i = 0; i < cloud.n_particles(); ++i)
        for (int l = 0; l < cloud.n_nodes(); ++l) {
            const auto theta = cloud.at(i, l);
            for (int c = 0; c < cloud.dim_param(); ++c)
                os << i << ',' << l << ',' << c << ',' << format_double(theta[c]) << '\n';
        }
}

ParticleCloud read_cloud_csv(std::istream& is, const TimeGrid& grid) {
    std::string line;
    if (!std::getline(is, line) || line != "particle,node,coord,value")
        throw ConfigError("cloud csv: missing header");
    struct Entry {
        int i, l, c;
        double v;
    };
    std::vector<Entry> entries;
    int max_i = -1, max_l = -1, max_c = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Entry e{};
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream ss(line);
        if (!(ss >> e.i >> c1 >> e.l >> c2 >> e.c >> c3 >> e.v) || c1 != ',' || c2 != ',' || c3 != ',')
            throw ConfigError("cloud csv: malformed row '" + line + "'");
        max_i = std::max(max_i, e.i);
        max_l = std::max(max_l, e.l);
        max_c = std::max(max_c, e.c);
        entries.push_back(e);
    }
    if (entries.empty()) throw ConfigError("cloud csv: no rows");
    if (max_l + 1 != grid.n_nodes()) throw DimensionError("cloud csv: node count does not match the grid");
    ParticleCloud cloud(max_i + 1, grid, max_c + 1);
    if (entries.size() != cloud.raw().size()) throw ConfigError("cloud csv: incomplete cloud");
    for (const auto& e : entries) {
        if (e.i < 0 || e.l < 0 || e.c < 0) throw ConfigError("cloud csv: negative index");
        cloud.at(e.i, e.l)[e.c] = e.v;
    }
    return cloud;
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw ConfigError("cloud binary: truncated stream");
    return v;
}

}  // namespace

void write_cloud_binary(std::ostream& os, const ParticleCloud& cloud) {
    os.write("MFLC", 4);
    put<std::int32_t>(os, cloud.n_particles());
    put<std::int32_t>(os, cloud.grid().n_steps());
    put<std::int32_t>(os, cloud.dim_param());
    put<double>(os, cloud.grid().horizon());
    put<std::uint64_t>(os, cloud.seed());
    os.write(reinterpret_cast<const char*>(cloud.raw().data()),
             static_cast<std::streamsize>(cloud.raw().size() * sizeof(double)));
}

ParticleCloud read_cloud_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "MFLC", 4) != 0) throw ConfigError("cloud binary: bad magic");
    const auto n = get<std::int32_t>(is);
    const auto steps = get<std::int32_t>(is);
    const auto p = get<std::int32_t>(is);
    const auto horizon = get<double>(is);
    const auto seed = get<std::uint64_t>(is);
    ParticleCloud cloud(n, TimeGrid(horizon, steps), p, seed);
    if (!is.read(reinterpret_cast<char*>(cloud.raw().data()),
                 static_cast<std::streamsize>(cloud.raw().size() * sizeof(double))))
        throw ConfigError("cloud binary: truncated payload");
    return cloud;
}

}  // namespace mfl
