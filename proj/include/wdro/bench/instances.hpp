#pragma once

// Random small instances for cross-checking the oracle against brute force.

#include "wdro/reference.hpp"

#include <array>
#include <random>

namespace wdro::bench {

struct RandomInstance {
    LossModel loss;
    Vector x;
    SampleBuffer samples;
    double radius = 0;
};

struct InstanceShape {
    std::size_t max_samples = 4;
    std::size_t max_pieces = 3;
    Eigen::Index max_xi_dim = 2;
    Eigen::Index x_dim = 1;
    std::array<double, 4> radii{0.0, 0.1, 0.5, 1.0};
    bool allow_smooth = true;
};

namespace detail {
inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}
} // namespace detail

inline RandomInstance random_instance(std::mt19937_64& rng, const InstanceShape& shape = {}) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const Eigen::Index m = static_cast<Eigen::Index>(pick(1, static_cast<std::size_t>(shape.max_xi_dim)));
    const std::size_t K = pick(1, shape.max_pieces);
    const std::size_t t = pick(1, shape.max_samples);

    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < K; ++k) {
        XTerm xt = AffineTerm{detail::uniform_vector(rng, shape.x_dim, -1, 1), 2 * u(rng) - 1};
        const double height = 2 * u(rng) - 1;
        const double gamma = 0.5 + 1.5 * u(rng);
        Vector center = detail::uniform_vector(rng, m, -2, 2);
        XiTerm xi;
        if (shape.allow_smooth && u(rng) < 0.3)
            xi = SmoothConeTerm{height, gamma, std::move(center)};
        else
            xi = ConeTerm{height, gamma, std::move(center)};
        pieces.emplace_back(std::move(xt), std::move(xi));
    }

    RandomInstance inst{make_separable_loss(std::move(pieces)), detail::uniform_vector(rng, shape.x_dim, -1, 1),
                        SampleBuffer(m), shape.radii[pick(0, shape.radii.size() - 1)]};
    for (std::size_t i = 0; i < t; ++i) inst.samples.push(detail::uniform_vector(rng, m, -2, 2));
    return inst;
}

} // namespace wdro::bench
