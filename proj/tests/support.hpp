#pragma once

#include "wdro/reference.hpp"

#include <initializer_list>
#include <random>

namespace wdro::test {

inline Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

inline Vector scalar(double x) { return Vector::Constant(1, x); }

/// slope·x + height − gamma·‖ξ − center‖
inline Piece cone(Vector slope, double height, double gamma, Vector center) {
    return Piece(AffineTerm{std::move(slope), 0.0}, ConeTerm{height, gamma, std::move(center)});
}

/// height − gamma·‖ξ − center‖ with a one-dimensional, x-free x-term.
inline Piece cone_xi(double height, double gamma, Vector center) {
    return cone(scalar(0), height, gamma, std::move(center));
}

inline Piece smooth_xi(double height, double gamma, Vector center) {
    return Piece(AffineTerm{scalar(0), 0.0}, SmoothConeTerm{height, gamma, std::move(center)});
}

/// ℓ(ξ) = max(−|ξ − 1|, −|ξ + 1|), no dependence on x.
inline LossModel twin_cones() { return make_separable_loss({cone_xi(0, 1, scalar(1)), cone_xi(0, 1, scalar(-1))}); }

/// ℓ(x, ξ) = max(x − |ξ − 1|, −x − |ξ + 1|): the one-dimensional reference loss.
inline LossModel reference_loss() {
    return make_separable_loss({cone(scalar(1), 0, 1, scalar(1)), cone(scalar(-1), 0, 1, scalar(-1))});
}

inline DecisionSpace unit_box() { return DecisionSpace::box(scalar(-1), scalar(1)); }

inline SampleBuffer buffer(std::initializer_list<double> xs) {
    SampleBuffer b(1);
    for (double x : xs) b.push(scalar(x));
    return b;
}

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(engine);
    }
    Vector vector(Eigen::Index n, double lo, double hi) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
        return v;
    }
};

/// Random separable loss with cone and smooth cone pieces.
inline LossModel random_loss(Rng& rng, std::size_t pieces, Eigen::Index x_dim, Eigen::Index xi_dim) {
    std::vector<Piece> out;
    for (std::size_t k = 0; k < pieces; ++k) {
        XTerm xt = rng.uniform(0, 1) < 0.5
                       ? XTerm(AffineTerm{rng.vector(x_dim, -1, 1), rng.uniform(-1, 1)})
                       : XTerm(AbsDeviationTerm{rng.vector(x_dim, -1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 1.5)});
        const double h = rng.uniform(-1, 1), g = rng.uniform(0.5, 2);
        Vector c = rng.vector(xi_dim, -2, 2);
        XiTerm xi = rng.uniform(0, 1) < 0.5 ? XiTerm(ConeTerm{h, g, std::move(c)})
                                            : XiTerm(SmoothConeTerm{h, g, std::move(c)});
        out.emplace_back(std::move(xt), std::move(xi));
    }
    return make_separable_loss(std::move(out));
}

} // namespace wdro::test
