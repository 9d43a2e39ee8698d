#pragma once

#include "wdro/model.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace wdro {

/// Finitely supported probability measure.
struct DiscreteDistribution {
    std::vector<Vector> atoms;
    std::vector<double> weights;

    std::size_t size() const { return atoms.size(); }

    void add(Vector atom, double weight) {
        atoms.push_back(std::move(atom));
        weights.push_back(weight);
    }

    double total_weight() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

    /// Throws input_error unless weights are nonnegative, sum to one within
    /// `tol` and all atoms share one dimension.
    void validate(double tol = 1e-9) const {
        require_input(atoms.size() == weights.size(), "DiscreteDistribution: atom/weight count mismatch");
        require_input(!atoms.empty(), "DiscreteDistribution: empty support");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            require_dim(atoms[i].size(), atoms[0].size(), "DiscreteDistribution atom");
            require_input(atoms[i].allFinite(), "DiscreteDistribution: non-finite atom");
            require_input(std::isfinite(weights[i]) && weights[i] >= 0, "DiscreteDistribution: negative weight");
        }
        require_input(std::abs(total_weight() - 1) <= tol, "DiscreteDistribution: weights do not sum to 1");
    }

    template <class F>
    double expectation(F&& f) const {
        double acc = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i) acc += weights[i] * f(atoms[i]);
        return acc;
    }

    static DiscreteDistribution empirical(const SampleBuffer& samples) {
        DiscreteDistribution d;
        const double w = samples.weight();
        for (const auto& s : samples.samples()) d.add(s, w);
        return d;
    }

    static DiscreteDistribution uniform(std::vector<Vector> atoms) {
        DiscreteDistribution d;
        const double w = atoms.empty() ? 0.0 : 1.0 / static_cast<double>(atoms.size());
        d.weights.assign(atoms.size(), w);
        d.atoms = std::move(atoms);
        return d;
    }
};

/// E_Q[ℓ(x, ·)]
inline double expected_loss(const LossModel& loss, const Vector& x, const DiscreteDistribution& q) {
    return q.expectation([&](const Vector& xi) { return loss_eval(loss, x, xi).value; });
}

/// Q-weighted average of per-atom argmax-piece subgradients: an element of
/// ∂_x E_Q[ℓ(x, ·)].
inline Vector expected_subgradient(const LossModel& loss, const Vector& x, const DiscreteDistribution& q) {
    Vector g = Vector::Zero(x.size());
    for (std::size_t i = 0; i < q.size(); ++i) g += q.weights[i] * loss_subgrad_x(loss, x, q.atoms[i]);
    return g;
}

} // namespace wdro
