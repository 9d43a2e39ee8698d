#pragma once

// ε-accurate maximization of the perspective objective α·ℓ_k(ξ̂ − q/α)
// over the ball ‖q‖ ≤ β, for a single loss piece.

#include "wdro/model.hpp"

#include <cmath>
#include <cstddef>
#include <optional>

namespace wdro {

enum class InnerMethod {
    exact,     ///< closed-form ball maximum of the shipped ξ-families
    iterative, ///< projected (super)gradient ascent using only value/supergradient oracles
};

struct InnerSolution {
    Vector q_star;
    double value = 0;
    std::size_t iterations = 0;
    /// False only when the iterative nonsmooth schedule was truncated by the
    /// iteration cap before its accuracy guarantee applied.
    bool certified = true;
};

struct IterativeOptions {
    std::size_t max_iterations = 2'000'000;
};

namespace detail {

inline void check_perspective_args(double alpha, double beta, double eps) {
    require_input(std::isfinite(alpha) && alpha > 0 && alpha <= 1, "perspective_max: alpha must lie in (0, 1]");
    require_input(std::isfinite(beta) && beta >= 0, "perspective_max: beta must be >= 0");
    require_input(std::isfinite(eps) && eps > 0, "perspective_max: eps must be > 0");
}

inline Vector project_ball(const Vector& v, double radius) {
    const double n = v.norm();
    return n <= radius ? v : Vector(v * (radius / n));
}

// Objective in the substituted variable v = q/α: h(v) = w(ξ̂ − v).
struct ShiftedPiece {
    const Piece& piece;
    const Vector& xi_hat;
    double value(const Vector& v) const { return piece.xi_value(xi_hat - v); }
    Vector gradient(const Vector& v) const { return -piece.xi_supergradient(xi_hat - v); }
};

/// First-order upper bound on max_{‖u‖≤R} h(u) − h(v) for concave h.
inline double ball_gap_bound(const Vector& v, const Vector& g, double radius) {
    return std::max(radius * g.norm() - g.dot(v), 0.0);
}

inline InnerSolution ascend_nonsmooth(const ShiftedPiece& h, double alpha, double beta, double eps, double u,
                                      const IterativeOptions& opts) {
    const double radius = beta / alpha;
    const double gamma = h.piece.xi_lipschitz();
    InnerSolution out;
    Vector v = Vector::Zero(h.xi_hat.size());
    Vector best = v;
    double best_value = h.value(v);
    if (radius == 0 || gamma == 0) {
        out.q_star = alpha * best;
        out.value = alpha * (u + best_value);
        return out;
    }
    const double needed = std::ceil(std::pow(beta * gamma / eps, 2));
    const auto steps = static_cast<std::size_t>(std::min<double>(needed, static_cast<double>(opts.max_iterations)));
    out.certified = needed <= static_cast<double>(opts.max_iterations);
    const double step = radius / (gamma * std::sqrt(static_cast<double>(std::max<std::size_t>(steps, 1))));
    for (std::size_t i = 0; i < steps; ++i) {
        const Vector g = h.gradient(v);
        if (alpha * ball_gap_bound(v, g, radius) <= eps) {
            out.certified = true;
            break;
        }
        v = project_ball(v + step * g, radius);
        ++out.iterations;
        const double val = h.value(v);
        if (val > best_value) {
            best_value = val;
            best = v;
        }
    }
    out.q_star = alpha * best;
    out.value = alpha * (u + best_value);
    return out;
}

inline InnerSolution ascend_smooth(const ShiftedPiece& h, double alpha, double beta, double eps, double u,
                                   const Vector* warm, const IterativeOptions& opts) {
    const double radius = beta / alpha;
    InnerSolution out;
    Vector v = warm ? project_ball(*warm, radius) : Vector::Zero(h.xi_hat.size());
    double val = h.value(v);
    double step = 1.0 / std::max(h.piece.xi_lipschitz(), 1e-12);
    out.certified = false;
    for (std::size_t i = 0; i < opts.max_iterations; ++i) {
        const Vector g = h.gradient(v);
        if (alpha * ball_gap_bound(v, g, radius) <= eps) {
            out.certified = true;
            break;
        }
        // Backtracking on the quadratic lower model of a concave function.
        for (int tries = 0; tries < 60; ++tries) {
            Vector cand = project_ball(v + step * g, radius);
            const double cand_val = h.value(cand);
            const Vector diff = cand - v;
            if (cand_val >= val + g.dot(diff) - diff.squaredNorm() / (2 * step)) {
                v = std::move(cand);
                val = cand_val;
                break;
            }
            step *= 0.5;
        }
        ++out.iterations;
    }
    out.q_star = alpha * v;
    out.value = alpha * (u + val);
    return out;
}

} // namespace detail

/// Maximizes α·(u + w_k(ξ̂ − q/α)) over ‖q‖ ≤ β to accuracy eps, where u is
/// the piece's x-term already evaluated at the current decision.
/// The iterative route substitutes v = q/α and runs projected ascent over
/// ‖v‖ ≤ β/α: a fixed step β/(αγ√N) with N = ⌈(βγ/ε)²⌉ for nonsmooth pieces,
/// and backtracking gradient ascent stopped by the concavity gap bound for
/// smooth ones. `warm` (in v coordinates) only seeds the smooth route.
inline InnerSolution perspective_max(const Piece& piece, const Vector& xi_hat, double alpha, double beta, double eps,
                                     InnerMethod method = InnerMethod::iterative, double x_constant = 0,
                                     const Vector* warm = nullptr, const IterativeOptions& opts = {}) {
    detail::check_perspective_args(alpha, beta, eps);
    require_dim(xi_hat.size(), piece.xi_dim(), "perspective_max xi_hat");
    if (method == InnerMethod::exact) {
        const BallMax m = piece.ball_max(xi_hat, beta / alpha);
        InnerSolution out;
        out.q_star = alpha * m.shift;
        out.value = alpha * x_constant + piece.scaled_ball_max(alpha, beta, piece.anchor_statistic(xi_hat));
        return out;
    }
    const detail::ShiftedPiece h{piece, xi_hat};
    if (piece.smooth()) return detail::ascend_smooth(h, alpha, beta, eps, x_constant, warm, opts);
    return detail::ascend_nonsmooth(h, alpha, beta, eps, x_constant, opts);
}

/// One piece paired with one empirical point at a fixed decision; the unit the
/// nested searches query repeatedly. The exact route caches the scalar anchor
/// statistic, so value() does no allocation.
class PerspectiveProblem {
public:
    PerspectiveProblem(const Piece& piece, const Vector& xi_hat, double x_constant, InnerMethod method, double eps,
                       IterativeOptions opts = {})
        : piece_(&piece), xi_hat_(&xi_hat), x_constant_(x_constant), method_(method), eps_(eps), opts_(opts),
          form_(piece.perspective_form(piece.anchor_statistic(xi_hat), x_constant)) {}

    double value(double alpha, double beta) const {
        if (method_ == InnerMethod::exact) return form_.value(alpha, beta);
        return solve(alpha, beta).value;
    }

    InnerSolution solve(double alpha, double beta) const {
        const Vector* warm = warm_ ? &*warm_ : nullptr;
        InnerSolution s = perspective_max(*piece_, *xi_hat_, alpha, beta, eps_, method_, x_constant_, warm, opts_);
        if (method_ == InnerMethod::iterative) warm_ = Vector(s.q_star / alpha);
        return s;
    }

    /// Budget beyond which value(α, ·) is flat.
    double saturation(double alpha) const { return form_.saturation(alpha); }

    /// sup_ξ u + w(ξ); +inf for pieces unbounded above.
    double supremum() const { return form_.supremum(); }

    /// Value of the piece at the unmoved point: u + w(ξ̂).
    double at_center() const { return x_constant_ + piece_->xi_value(*xi_hat_); }

private:
    const Piece* piece_;
    const Vector* xi_hat_;
    double x_constant_;
    InnerMethod method_;
    double eps_;
    IterativeOptions opts_;
    PerspectiveForm form_;
    mutable std::optional<Vector> warm_;
};

} // namespace wdro
