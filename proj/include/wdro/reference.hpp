#pragma once

// Independent validators for the worst-case oracle: grid brute force of the
// pair and master problems, exact discrete 1-Wasserstein distances, finite
// difference checks, and an offline gap proxy.
//
// The brute-force routines only evaluate loss pieces at grid locations; they
// never call the closed-form ball maxima or the golden-section searches.

#include "wdro/budget.hpp"
#include "wdro/distribution.hpp"
#include "wdro/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace wdro {

/// Resolutions of the brute-force grids. `location` counts points per axis of
/// the atom-location grid; zero picks a default by dimension.
struct GridSpec {
    std::size_t alpha = 201;
    std::size_t beta = 201;
    std::size_t budget = 200;
    std::size_t location = 0;
    std::size_t radius_bins = 20000;
    double margin = 1.0;

    std::size_t location_points(Eigen::Index dim) const {
        if (location > 0) return location;
        return dim == 1 ? 4001 : 301;
    }

    void validate() const {
        require_input(alpha >= 10 && beta >= 10 && budget >= 10 && radius_bins >= 10 &&
                          (location == 0 || location >= 10),
                      "GridSpec: every resolution must be >= 10");
        require_input(std::isfinite(margin) && margin >= 0, "GridSpec: margin must be >= 0");
    }
};

namespace detail {

inline void brute_force_guard(Eigen::Index dim) {
    if (dim > 2) throw scale_error("brute force limited to sample dimension <= 2, got " + std::to_string(dim));
}

} // namespace detail

/// Tabulated best loss reachable per piece within a transport radius, over a
/// location grid around one empirical point: F_k(r) = max{ℓ_k(z) : z ∈ grid,
/// ‖z − ξ̂‖ ≤ r}. Radii are rounded down to table bins, so every lookup is
/// attained by a feasible grid atom.
class GridUtility {
public:
    GridUtility(const LossAtX& loss, const Vector& xi_hat, double max_budget, const GridSpec& grid)
        : grid_(grid), K_(loss.size()) {
        grid.validate();
        detail::brute_force_guard(xi_hat.size());
        require_input(loss.model->bounded_above(), "brute force requires pieces bounded above in xi");
        const Eigen::Index m = xi_hat.size();

        Vector lo = xi_hat, hi = xi_hat;
        for (std::size_t k = 0; k < K_; ++k)
            if (const Vector* a = loss.piece(k).xi_anchor()) {
                lo = lo.cwiseMin(*a);
                hi = hi.cwiseMax(*a);
            }
        lo.array() -= grid.margin;
        hi.array() += grid.margin;

        const std::size_t n = grid.location_points(m);
        spacing_ = ((hi - lo) / static_cast<double>(n - 1)).maxCoeff();
        std::vector<Vector> points;
        points.push_back(xi_hat);
        if (m == 1) {
            for (std::size_t i = 0; i < n; ++i) points.push_back(lo + (hi - lo) * (double(i) / double(n - 1)));
        } else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    Vector z(2);
                    z(0) = lo(0) + (hi(0) - lo(0)) * double(i) / double(n - 1);
                    z(1) = lo(1) + (hi(1) - lo(1)) * double(j) / double(n - 1);
                    points.push_back(std::move(z));
                }
        }

        std::vector<std::pair<double, std::size_t>> order;
        order.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) order.emplace_back((points[i] - xi_hat).norm(), i);
        std::sort(order.begin(), order.end());
        max_distance_ = order.back().first;
        bin_width_ = max_distance_ / static_cast<double>(grid.radius_bins);

        tables_.assign(K_, std::vector<double>(grid.radius_bins + 1, -std::numeric_limits<double>::infinity()));
        at_center_.resize(K_);
        reach_max_.resize(K_);
        for (std::size_t k = 0; k < K_; ++k) {
            const Piece& p = loss.piece(k);
            at_center_[k] = loss.constants[k] + p.xi_value(xi_hat);
            double running = -std::numeric_limits<double>::infinity();
            std::size_t cursor = 0;
            for (std::size_t bin = 0; bin <= grid.radius_bins; ++bin) {
                const double r = bin_width_ * static_cast<double>(bin);
                while (cursor < order.size() && order[cursor].first <= r) {
                    running = std::max(running, loss.constants[k] + p.xi_value(points[order[cursor].second]));
                    ++cursor;
                }
                tables_[k][bin] = running;
            }
            reach_max_[k] = running;
        }
        max_budget_ = max_budget;
    }

    /// max over grid atoms within distance r of ξ̂ of ℓ_k
    double reach(std::size_t k, double r) const {
        if (bin_width_ == 0 || r >= max_distance_) return reach_max_[k];
        return tables_[k][static_cast<std::size_t>(r / bin_width_)];
    }

    /// Grid maximum of the pair objective: α₁, β₁ on uniform grids with both
    /// α-endpoints, atoms from the location grid.
    double pair(std::size_t k1, std::size_t k2, double b) const {
        require_input(k1 < k2 && k2 < K_, "brute_force_pair: requires piece indices k1 < k2 < K");
        require_input(std::isfinite(b) && b >= 0, "brute_force_pair: budget must be >= 0");
        if (b == 0) return std::max(at_center_[k1], at_center_[k2]);
        double best = -std::numeric_limits<double>::infinity();
        const std::size_t na = grid_.alpha, nb = grid_.beta;
        for (std::size_t ia = 0; ia < na; ++ia) {
            const double a1 = double(ia) / double(na - 1);
            const double a2 = 1 - a1;
            for (std::size_t ib = 0; ib < nb; ++ib) {
                const double b1 = b * double(ib) / double(nb - 1);
                const double b2 = b - b1;
                const double v1 = a1 > 0 ? a1 * reach(k1, b1 / a1) : 0.0;
                const double v2 = a2 > 0 ? a2 * reach(k2, b2 / a2) : 0.0;
                best = std::max(best, v1 + v2);
            }
        }
        return best;
    }

    /// Grid maximum of S_i(b): over all pairs, or the single piece when K = 1.
    double utility(double b) const {
        if (K_ == 1) return b == 0 ? at_center_[0] : reach(0, b);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k1 = 0; k1 + 1 < K_; ++k1)
            for (std::size_t k2 = k1 + 1; k2 < K_; ++k2) best = std::max(best, pair(k1, k2, b));
        return best;
    }

    double spacing() const { return spacing_; }
    double max_distance() const { return max_distance_; }
    double bin_width() const { return bin_width_; }

    /// Spread of achievable piece values: max_k sup F_k − min_k ℓ_k(ξ̂).
    double value_spread() const {
        return *std::max_element(reach_max_.begin(), reach_max_.end()) -
               *std::min_element(at_center_.begin(), at_center_.end());
    }

private:
    GridSpec grid_;
    std::size_t K_;
    double spacing_ = 0;
    double max_distance_ = 0;
    double bin_width_ = 0;
    double max_budget_ = 0;
    std::vector<std::vector<double>> tables_;
    std::vector<double> at_center_;
    std::vector<double> reach_max_;
};

/// Grid lower bound of S_i^{(k1,k2)}(b).
inline double brute_force_pair(const LossAtX& loss, const Vector& xi_hat, std::size_t k1, std::size_t k2, double b,
                               const GridSpec& grid = {}) {
    require_input(k1 < k2 && k2 < loss.size(), "brute_force_pair: requires piece indices k1 < k2 < K");
    return GridUtility(loss, xi_hat, b, grid).pair(k1, k2, b);
}

struct BruteForceMaster {
    double value = 0;      ///< grid lower bound of the master optimum
    double resolution = 0; ///< conservative bound on (true optimum − value)
};

namespace detail {

inline void master_guard(const LossAtX& loss, const SampleBuffer& samples) {
    if (samples.size() > 4 || loss.size() > 3 || samples.dim() > 2)
        throw scale_error("brute_force_master limited to t <= 4, K <= 3, m <= 2");
}

} // namespace detail

/// Grid lower bound of max (1/t) Σ S_i(b_i) s.t. Σ b_i ≤ ρt, with each S_i
/// tabulated by grid brute force on a uniform budget grid and the split
/// maximized over every grid composition of the total budget.
inline BruteForceMaster brute_force_master_detailed(const LossAtX& loss, const SampleBuffer& samples, double radius,
                                                    const GridSpec& grid = {}) {
    require_input(!samples.empty(), "brute_force_master: at least one sample required");
    require_input(std::isfinite(radius) && radius >= 0, "brute_force_master: radius must be >= 0");
    detail::master_guard(loss, samples);
    grid.validate();
    const std::size_t t = samples.size();
    BruteForceMaster out;
    if (radius == 0) {
        for (const auto& xi : samples.samples()) out.value += loss.value(xi);
        out.value /= double(t);
        return out;
    }
    const double total = radius * double(t);
    const std::size_t nb = grid.budget;
    const double h = total / double(nb);

    std::vector<std::vector<double>> tables;
    double worst_spacing = 0, worst_bins = 0, worst_reach = 0, spread = 0;
    for (const auto& xi : samples.samples()) {
        GridUtility gu(loss, xi, total, grid);
        std::vector<double> s(nb + 1);
        for (std::size_t j = 0; j <= nb; ++j) s[j] = gu.utility(h * double(j));
        // A smaller budget stays feasible under a larger one.
        for (std::size_t j = 1; j <= nb; ++j) s[j] = std::max(s[j], s[j - 1]);
        tables.push_back(std::move(s));
        worst_spacing = std::max(worst_spacing, gu.spacing());
        worst_bins = std::max(worst_bins, gu.bin_width());
        worst_reach = std::max(worst_reach, gu.max_distance());
        spread = std::max(spread, gu.value_spread());
    }

    // Max-plus accumulation over samples: identical to enumerating every grid
    // composition of nb budget units.
    std::vector<double> acc = tables[0];
    for (std::size_t i = 1; i < t; ++i) {
        std::vector<double> next(nb + 1, -std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j <= nb; ++j)
            for (std::size_t jj = 0; jj <= j; ++jj) next[j] = std::max(next[j], acc[j - jj] + tables[i][jj]);
        acc = std::move(next);
    }
    out.value = acc[nb] / double(t);

    const double lip = loss.lip();
    const double m = double(samples.dim());
    const double h_alpha = 1.0 / double(grid.alpha - 1);
    const double h_beta = total / double(grid.beta - 1);
    out.resolution = lip * (1.5 * std::sqrt(m) * worst_spacing + worst_bins + h_beta + h) +
                     0.5 * h_alpha * (spread + lip * worst_reach);
    return out;
}

inline double brute_force_master(const LossAtX& loss, const SampleBuffer& samples, double radius,
                                 const GridSpec& grid = {}) {
    return brute_force_master_detailed(loss, samples, radius, grid).value;
}

// ********************************************************************************
// ***** Discrete 1-Wasserstein distance ******************************************
// ********************************************************************************

namespace detail {

inline double w1_sorted(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    struct Event {
        double x;
        double dp;
    };
    std::vector<Event> ev;
    ev.reserve(p.size() + q.size());
    for (std::size_t i = 0; i < p.size(); ++i) ev.push_back({p.atoms[i](0), p.weights[i]});
    for (std::size_t j = 0; j < q.size(); ++j) ev.push_back({q.atoms[j](0), -q.weights[j]});
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.x < b.x; });
    // ∫ |F_P − F_Q| dx over the merged support.
    double cdf_gap = 0, cost = 0;
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
        cdf_gap += ev[i].dp;
        cost += std::abs(cdf_gap) * (ev[i + 1].x - ev[i].x);
    }
    return cost;
}

/// Successive shortest paths with Dijkstra and node potentials on the dense
/// bipartite transport graph. Masses are scaled to integers on a common
/// denominator of 2^40.
inline double w1_flow(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    constexpr double scale = 1099511627776.0; // 2^40
    const std::size_t n = p.size(), m = q.size();
    auto to_units = [&](const std::vector<double>& w, double sum) {
        std::vector<std::int64_t> u(w.size());
        std::int64_t acc = 0;
        std::size_t largest = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            u[i] = static_cast<std::int64_t>(std::llround(w[i] / sum * scale));
            acc += u[i];
            if (w[i] > w[largest]) largest = i;
        }
        u[largest] += static_cast<std::int64_t>(scale) - acc;
        return u;
    };
    std::vector<std::int64_t> supply = to_units(p.weights, p.total_weight());
    std::vector<std::int64_t> demand = to_units(q.weights, q.total_weight());
    std::vector<double> cost(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = (p.atoms[i] - q.atoms[j]).norm();
    std::vector<std::int64_t> flow(n * m, 0);
    std::vector<double> pot(n + m, 0.0);
    const double inf = std::numeric_limits<double>::infinity();

    std::int64_t remaining = static_cast<std::int64_t>(scale);
    while (remaining > 0) {
        std::vector<double> dist(n + m, inf);
        std::vector<std::ptrdiff_t> prev(n + m, -1);
        std::vector<char> done(n + m, 0);
        for (std::size_t i = 0; i < n; ++i)
            if (supply[i] > 0) dist[i] = 0;
        std::ptrdiff_t target = -1;
        for (;;) {
            std::ptrdiff_t u = -1;
            for (std::size_t v = 0; v < n + m; ++v)
                if (!done[v] && dist[v] < inf && (u < 0 || dist[v] < dist[static_cast<std::size_t>(u)]))
                    u = static_cast<std::ptrdiff_t>(v);
            if (u < 0) break;
            const auto uu = static_cast<std::size_t>(u);
            done[uu] = 1;
            if (uu >= n && demand[uu - n] > 0) {
                target = u;
                break;
            }
            if (uu < n) {
                for (std::size_t j = 0; j < m; ++j) {
                    const double nd = dist[uu] + std::max(cost[uu * m + j] + pot[uu] - pot[n + j], 0.0);
                    if (nd < dist[n + j]) {
                        dist[n + j] = nd;
                        prev[n + j] = u;
                    }
                }
            } else {
                const std::size_t j = uu - n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (flow[i * m + j] <= 0) continue;
                    const double nd = dist[uu] + std::max(-cost[i * m + j] + pot[uu] - pot[i], 0.0);
                    if (nd < dist[i]) {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }
        if (target < 0) throw numeric_error("discrete_w1: transport flow is infeasible");
        const double reach = dist[static_cast<std::size_t>(target)];
        for (std::size_t v = 0; v < n + m; ++v) pot[v] += std::min(dist[v], reach);

        // Bottleneck along the path back to a source with spare supply.
        std::int64_t amount = demand[static_cast<std::size_t>(target) - n];
        std::ptrdiff_t v = target;
        while (prev[static_cast<std::size_t>(v)] >= 0) {
            const auto vv = static_cast<std::size_t>(v);
            const auto pp = static_cast<std::size_t>(prev[vv]);
            if (vv < n) amount = std::min(amount, flow[vv * m + (pp - n)]);
            v = prev[vv];
        }
        amount = std::min(amount, supply[static_cast<std::size_t>(v)]);
        supply[static_cast<std::size_t>(v)] -= amount;
        demand[static_cast<std::size_t>(target) - n] -= amount;
        remaining -= amount;
        v = target;
        while (prev[static_cast<std::size_t>(v)] >= 0) {
            const auto vv = static_cast<std::size_t>(v);
            const auto pp = static_cast<std::size_t>(prev[vv]);
            if (vv >= n)
                flow[pp * m + (vv - n)] += amount;
            else
                flow[vv * m + (pp - n)] -= amount;
            v = prev[vv];
        }
    }
    double total = 0;
    for (std::size_t k = 0; k < n * m; ++k)
        if (flow[k] > 0) total += static_cast<double>(flow[k]) * cost[k];
    return total / scale;
}

inline void w1_check(const DiscreteDistribution& p, const DiscreteDistribution& q) {
    p.validate(1e-6);
    q.validate(1e-6);
    require_dim(q.atoms[0].size(), p.atoms[0].size(), "discrete_w1");
    require_input(std::abs(p.total_weight() - q.total_weight()) <= 1e-9, "discrete_w1: total masses differ");
}

} // namespace detail

enum class W1Method { automatic, sorted, flow };

/// Exact 1-Wasserstein distance with Euclidean ground cost. One-dimensional
/// inputs use the quantile coupling unless `flow` is requested.
inline double discrete_w1(const DiscreteDistribution& p, const DiscreteDistribution& q,
                          W1Method method = W1Method::automatic) {
    detail::w1_check(p, q);
    const bool one_d = p.atoms[0].size() == 1;
    if (method == W1Method::sorted) {
        require_input(one_d, "discrete_w1: sorted coupling needs one-dimensional atoms");
        return detail::w1_sorted(p, q);
    }
    if (method == W1Method::automatic && one_d) return detail::w1_sorted(p, q);
    return detail::w1_flow(p, q);
}

// ********************************************************************************
// ***** Finite differences *******************************************************
// ********************************************************************************

/// max_i |central difference of w along e_i − reported supergradient_i|
inline double finite_diff_check(const Piece& piece, const Vector& xi, double h) {
    require_input(piece.smooth(), "finite_diff_check: piece is not flagged smooth");
    require_input(std::isfinite(h) && h > 0, "finite_diff_check: step must be > 0");
    require_dim(xi.size(), piece.xi_dim(), "finite_diff_check");
    const Vector g = piece.xi_supergradient(xi);
    double worst = 0;
    for (Eigen::Index i = 0; i < xi.size(); ++i) {
        Vector up = xi, down = xi;
        up(i) += h;
        down(i) -= h;
        const double fd = (piece.xi_value(up) - piece.xi_value(down)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g(i)));
    }
    return worst;
}

// ********************************************************************************
// ***** Gap proxy ****************************************************************
// ********************************************************************************

/// Grid points of a decision space with dimension ≤ 2; balls keep the grid
/// points of their bounding box that lie inside.
inline std::vector<Vector> decision_grid(const DecisionSpace& space, std::size_t per_axis) {
    if (space.dim() > 2) throw scale_error("decision grid limited to dimension <= 2");
    require_input(per_axis >= 2, "decision grid needs at least 2 points per axis");
    Vector lo, hi;
    if (space.kind() == DecisionSpace::Kind::box) {
        lo = space.lower();
        hi = space.upper();
    } else {
        lo = space.center().array() - space.radius();
        hi = space.center().array() + space.radius();
    }
    auto coord = [&](Eigen::Index axis, std::size_t i) {
        return lo(axis) + (hi(axis) - lo(axis)) * double(i) / double(per_axis - 1);
    };
    std::vector<Vector> out;
    if (space.dim() == 1) {
        for (std::size_t i = 0; i < per_axis; ++i) out.push_back(Vector::Constant(1, coord(0, i)));
    } else {
        for (std::size_t i = 0; i < per_axis; ++i)
            for (std::size_t j = 0; j < per_axis; ++j) {
                Vector z(2);
                z << coord(0, i), coord(1, j);
                if (space.contains(z)) out.push_back(std::move(z));
            }
    }
    if (space.kind() == DecisionSpace::Kind::ball) out.push_back(space.center());
    return out;
}

struct GapEstimate {
    double value_at_x = 0; ///< worst-case objective at the queried decision
    double grid_min = 0;
    Vector grid_argmin;
    double gap = 0;
};

/// Worst-case objective over a fixed hold-out ball, tabulated on a decision
/// grid once and reused for many queries. With `refine > 0` and a 1-D
/// decision, the grid minimum is polished by golden-section search between
/// the argmin's neighbours down to an interval of width `refine` (the
/// objective is convex in x).
class GapBenchmark {
public:
    GapBenchmark(const LossModel& loss, SampleBuffer holdout, const AmbiguitySpec& amb, const DecisionSpace& space,
                 std::size_t per_axis, const ToleranceConfig& tol, double refine = 0)
        : loss_(loss), holdout_(std::move(holdout)), amb_(amb), tol_(tol) {
        if (space.dim() > 2) throw scale_error("gap_estimate limited to decision dimension <= 2");
        require_input(!holdout_.empty(), "gap_estimate: hold-out sample required");
        require_input(std::isfinite(refine) && refine >= 0, "gap_estimate: refinement width must be >= 0");
        grid_ = decision_grid(space, per_axis);
        values_.reserve(grid_.size());
        grid_min_ = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            values_.push_back(worst_case(grid_[i]));
            if (values_.back() < grid_min_) {
                grid_min_ = values_.back();
                argmin_ = grid_[i];
                best = i;
            }
        }
        if (refine > 0 && space.dim() == 1 && grid_.size() >= 2) {
            const double lo = grid_[best == 0 ? 0 : best - 1](0);
            const double hi = grid_[std::min(best + 1, grid_.size() - 1)](0);
            auto neg = [&](double x) {
                const double v = worst_case(Vector::Constant(1, x));
                ++refinements_;
                if (v < grid_min_) {
                    grid_min_ = v;
                    argmin_ = Vector::Constant(1, x);
                }
                return -v;
            };
            golden_section_max(neg, lo, hi, refine);
        }
    }

    double worst_case(const Vector& x) const {
        const LossAtX at(loss_, x);
        return wasserstein_oracle(at, holdout_, amb_, tol_).value;
    }

    GapEstimate estimate(const Vector& x) const {
        GapEstimate g;
        g.value_at_x = worst_case(x);
        g.grid_min = grid_min_;
        g.grid_argmin = argmin_;
        g.gap = g.value_at_x - grid_min_;
        return g;
    }

    const std::vector<Vector>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double grid_min() const { return grid_min_; }
    const Vector& grid_argmin() const { return argmin_; }
    const SampleBuffer& holdout() const { return holdout_; }
    std::size_t refinements() const { return refinements_; }

private:
    LossModel loss_;
    SampleBuffer holdout_;
    AmbiguitySpec amb_;
    ToleranceConfig tol_;
    std::vector<Vector> grid_;
    std::vector<double> values_;
    double grid_min_ = 0;
    Vector argmin_;
    std::size_t refinements_ = 0;
};

/// Worst-case objective at x minus its minimum over a decision grid, both
/// over the ball around a hold-out empirical measure standing in for the
/// data-generating distribution.
inline GapEstimate gap_estimate(const LossModel& loss, const Vector& x, const SampleBuffer& holdout,
                                const AmbiguitySpec& amb, const DecisionSpace& space, std::size_t per_axis,
                                const ToleranceConfig& tol) {
    require_dim(x.size(), space.dim(), "gap_estimate decision");
    return GapBenchmark(loss, holdout, amb, space, per_axis, tol).estimate(x);
}

} // namespace wdro
