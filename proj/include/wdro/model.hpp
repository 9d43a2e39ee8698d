#pragma once

#include "wdro/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

namespace wdro {

// ********************************************************************************
// ***** Decision space ***********************************************************
// ********************************************************************************

/// Compact convex feasible set for the learner: an axis-aligned box or a
/// Euclidean ball. Both admit closed-form projections.
class DecisionSpace {
public:
    enum class Kind { box, ball };

    static DecisionSpace box(Vector lower, Vector upper) {
        require_input(lower.size() > 0, "DecisionSpace::box: empty bounds");
        require_dim(upper.size(), lower.size(), "DecisionSpace::box upper");
        require_input(lower.allFinite() && upper.allFinite(), "DecisionSpace::box: non-finite bounds");
        require_input((lower.array() <= upper.array()).all(), "DecisionSpace::box: lower > upper");
        DecisionSpace s;
        s.kind_ = Kind::box;
        s.lower_ = std::move(lower);
        s.upper_ = std::move(upper);
        s.diameter_ = (s.upper_ - s.lower_).norm();
        return s;
    }

    static DecisionSpace ball(Vector center, double radius) {
        require_input(center.size() > 0, "DecisionSpace::ball: empty center");
        require_input(center.allFinite(), "DecisionSpace::ball: non-finite center");
        require_input(std::isfinite(radius) && radius >= 0, "DecisionSpace::ball: radius must be >= 0");
        DecisionSpace s;
        s.kind_ = Kind::ball;
        s.center_ = std::move(center);
        s.radius_ = radius;
        s.diameter_ = 2 * radius;
        return s;
    }

    Kind kind() const { return kind_; }
    Eigen::Index dim() const { return kind_ == Kind::box ? lower_.size() : center_.size(); }
    double diameter() const { return diameter_; }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    const Vector& center() const { return center_; }
    double radius() const { return radius_; }

    /// Euclidean projection onto the set.
    Vector project(const Vector& y) const {
        require_dim(y.size(), dim(), "DecisionSpace::project");
        if (kind_ == Kind::box) return y.cwiseMax(lower_).cwiseMin(upper_);
        Vector offset = y - center_;
        const double dist = offset.norm();
        if (dist <= radius_) return y;
        return center_ + offset * (radius_ / dist);
    }

    bool contains(const Vector& x, double tol = 1e-12) const {
        if (x.size() != dim()) return false;
        if (kind_ == Kind::box)
            return ((x.array() >= lower_.array() - tol) && (x.array() <= upper_.array() + tol)).all();
        return (x - center_).norm() <= radius_ + tol;
    }

    /// Point used as the learner's default start: the projection of the origin.
    Vector default_start() const { return project(Vector::Zero(dim())); }

private:
    DecisionSpace() = default;

    Kind kind_ = Kind::box;
    Vector lower_, upper_, center_;
    double radius_ = 0;
    double diameter_ = 0;
};

// ********************************************************************************
// ***** Loss pieces **************************************************************
// ********************************************************************************

/// u(x) = slope·x + intercept
struct AffineTerm {
    Vector slope;
    double intercept = 0;
};

/// u(x) = scale·|direction·x − offset|
struct AbsDeviationTerm {
    Vector direction;
    double offset = 0;
    double scale = 1;
};

using XTerm = std::variant<AffineTerm, AbsDeviationTerm>;

/// w(ξ) = height − gamma·‖ξ − center‖
struct ConeTerm {
    double height = 0;
    double gamma = 1;
    Vector center;
};

/// w(ξ) = height − gamma·sqrt(1 + ‖ξ − center‖²)
struct SmoothConeTerm {
    double height = 0;
    double gamma = 1;
    Vector center;
};

/// w(ξ) = height + slope·ξ. Concave but unbounded above; only usable with ρ = 0.
struct LinearTerm {
    double height = 0;
    Vector slope;
};

using XiTerm = std::variant<ConeTerm, SmoothConeTerm, LinearTerm>;

/// Result of maximizing w(ξ̂ − v) over ‖v‖ ≤ R.
struct BallMax {
    double value = 0;
    Vector shift;
};

namespace detail {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
} // namespace detail

/// α·(u + w(ξ̂ − q/α)) maximized over ‖q‖ ≤ β, reduced to scalars:
/// cone α·a − γ·max(αd − β, 0); smooth α·a − γ·√(α² + max(αd − β, 0)²);
/// linear α·a + β·γ with γ = ‖g‖.
struct PerspectiveForm {
    enum Kind { cone, smooth, linear } kind;
    double a;
    double gamma;
    double d;

    double value(double alpha, double beta) const {
        switch (kind) {
        case cone: return alpha * a - gamma * std::max(alpha * d - beta, 0.0);
        case smooth: {
            const double gap = std::max(alpha * d - beta, 0.0);
            return alpha * a - gamma * std::sqrt(alpha * alpha + gap * gap);
        }
        case linear: break;
        }
        return alpha * a + beta * gamma;
    }

    /// Smallest β at which value(α, ·) stops increasing.
    double saturation(double alpha) const {
        if (kind != linear) return alpha * d;
        return gamma > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    /// sup over β of value(1, β): the piece's supremum in ξ.
    double supremum() const {
        switch (kind) {
        case cone: return a;
        case smooth: return a - gamma;
        case linear: break;
        }
        return gamma > 0 ? std::numeric_limits<double>::infinity() : a;
    }
};

/// One concave piece ℓ_k(x, ξ) = u_k(x) + w_k(ξ) of a separable loss.
class Piece {
public:
    Piece(XTerm x_term, XiTerm xi_term) : x_term_(std::move(x_term)), xi_term_(std::move(xi_term)) {
        std::visit(detail::overloaded{
                       [](const AffineTerm& t) {
                           require_input(t.slope.size() > 0 && t.slope.allFinite() && std::isfinite(t.intercept),
                                         "AffineTerm: invalid coefficients");
                       },
                       [](const AbsDeviationTerm& t) {
                           require_input(t.direction.size() > 0 && t.direction.allFinite() &&
                                             std::isfinite(t.offset) && std::isfinite(t.scale) && t.scale >= 0,
                                         "AbsDeviationTerm: invalid coefficients");
                       }},
                   x_term_);
        std::visit(detail::overloaded{
                       [](const LinearTerm& t) {
                           require_input(t.slope.size() > 0 && t.slope.allFinite() && std::isfinite(t.height),
                                         "LinearTerm: invalid coefficients");
                       },
                       [](const auto& t) {
                           require_input(t.center.size() > 0 && t.center.allFinite() && std::isfinite(t.height) &&
                                             std::isfinite(t.gamma) && t.gamma >= 0,
                                         "cone term: invalid coefficients");
                       }},
                   xi_term_);
    }

    const XTerm& x_term() const { return x_term_; }
    const XiTerm& xi_term() const { return xi_term_; }

    Eigen::Index x_dim() const {
        return std::visit(detail::overloaded{[](const AffineTerm& t) { return t.slope.size(); },
                                             [](const AbsDeviationTerm& t) { return t.direction.size(); }},
                          x_term_);
    }

    Eigen::Index xi_dim() const {
        return std::visit(detail::overloaded{[](const LinearTerm& t) { return t.slope.size(); },
                                             [](const auto& t) { return t.center.size(); }},
                          xi_term_);
    }

    double x_value(const Vector& x) const {
        return std::visit(
            detail::overloaded{[&](const AffineTerm& t) { return t.slope.dot(x) + t.intercept; },
                               [&](const AbsDeviationTerm& t) { return t.scale * std::abs(t.direction.dot(x) - t.offset); }},
            x_term_);
    }

    /// Minimal-norm subgradient of u at x (0 at the kink of an absolute deviation).
    Vector x_subgradient(const Vector& x) const {
        return std::visit(detail::overloaded{[&](const AffineTerm& t) -> Vector { return t.slope; },
                                             [&](const AbsDeviationTerm& t) -> Vector {
                                                 const double r = t.direction.dot(x) - t.offset;
                                                 if (r == 0) return Vector::Zero(t.direction.size());
                                                 return (r > 0 ? t.scale : -t.scale) * t.direction;
                                             }},
                          x_term_);
    }

    double x_lipschitz() const {
        return std::visit(detail::overloaded{[](const AffineTerm& t) { return t.slope.norm(); },
                                             [](const AbsDeviationTerm& t) { return t.scale * t.direction.norm(); }},
                          x_term_);
    }

    double xi_value(const Vector& xi) const {
        return std::visit(
            detail::overloaded{[&](const ConeTerm& t) { return t.height - t.gamma * (xi - t.center).norm(); },
                               [&](const SmoothConeTerm& t) {
                                   return t.height - t.gamma * std::sqrt(1 + (xi - t.center).squaredNorm());
                               },
                               [&](const LinearTerm& t) { return t.height + t.slope.dot(xi); }},
            xi_term_);
    }

    /// Supergradient of w at ξ; at the apex of a cone the minimal-norm element 0.
    Vector xi_supergradient(const Vector& xi) const {
        return std::visit(detail::overloaded{[&](const ConeTerm& t) -> Vector {
                                                 Vector diff = xi - t.center;
                                                 const double r = diff.norm();
                                                 if (r == 0) return Vector::Zero(diff.size());
                                                 return -t.gamma / r * diff;
                                             },
                                             [&](const SmoothConeTerm& t) -> Vector {
                                                 Vector diff = xi - t.center;
                                                 return -t.gamma / std::sqrt(1 + diff.squaredNorm()) * diff;
                                             },
                                             [&](const LinearTerm& t) -> Vector { return t.slope; }},
                          xi_term_);
    }

    /// γ_k: Lipschitz constant of w in ξ.
    double xi_lipschitz() const {
        return std::visit(detail::overloaded{[](const LinearTerm& t) { return t.slope.norm(); },
                                             [](const auto& t) { return t.gamma; }},
                          xi_term_);
    }

    bool smooth() const { return !std::holds_alternative<ConeTerm>(xi_term_); }

    bool bounded_above() const {
        if (const auto* lin = std::get_if<LinearTerm>(&xi_term_)) return lin->slope.isZero(0);
        return true;
    }

    /// Point where w attains its supremum, if any.
    const Vector* xi_anchor() const {
        return std::visit(detail::overloaded{[](const LinearTerm&) -> const Vector* { return nullptr; },
                                             [](const auto& t) -> const Vector* { return &t.center; }},
                          xi_term_);
    }

    /// Scalar summary of ξ̂ that determines every ball maximum of w around ξ̂:
    /// ‖ξ̂ − center‖ for cones, slope·ξ̂ for linear terms.
    double anchor_statistic(const Vector& xi_hat) const {
        return std::visit(detail::overloaded{[&](const LinearTerm& t) { return t.slope.dot(xi_hat); },
                                             [&](const auto& t) { return (xi_hat - t.center).norm(); }},
                          xi_term_);
    }

    /// max_{‖q‖≤β} α·w(ξ̂ − q/α) in closed form, written without dividing by α.
    double scaled_ball_max(double alpha, double beta, double stat) const {
        return perspective_form(stat).value(alpha, beta);
    }

    PerspectiveForm perspective_form(double stat, double x_constant = 0) const {
        return std::visit(
            detail::overloaded{
                [&](const ConeTerm& t) { return PerspectiveForm{PerspectiveForm::cone, x_constant + t.height, t.gamma, stat}; },
                [&](const SmoothConeTerm& t) {
                    return PerspectiveForm{PerspectiveForm::smooth, x_constant + t.height, t.gamma, stat};
                },
                [&](const LinearTerm& t) {
                    return PerspectiveForm{PerspectiveForm::linear, x_constant + t.height + stat, t.slope.norm(), 0.0};
                }},
            xi_term_);
    }

    /// Exact maximizer of w(ξ̂ − v) over ‖v‖ ≤ radius.
    BallMax ball_max(const Vector& xi_hat, double radius) const {
        BallMax out;
        std::visit(detail::overloaded{[&](const LinearTerm& t) {
                                          const double g = t.slope.norm();
                                          out.shift = g > 0 ? Vector(-radius / g * t.slope) : Vector::Zero(xi_hat.size());
                                      },
                                      [&](const auto& t) {
                                          Vector toward = xi_hat - t.center;
                                          const double d = toward.norm();
                                          out.shift = d > radius ? Vector(toward * (radius / d)) : toward;
                                      }},
                   xi_term_);
        out.value = xi_value(xi_hat - out.shift);
        return out;
    }

private:
    XTerm x_term_;
    XiTerm xi_term_;
};

// ********************************************************************************
// ***** Loss model ***************************************************************
// ********************************************************************************

struct LossValue {
    double value = 0;
    std::size_t piece = 0;
};

/// ℓ(x, ξ) = max_k ℓ_k(x, ξ) over separable concave-in-ξ pieces.
class LossModel {
public:
    /// Builds a loss without the bounded-above check. Unbounded pieces are only
    /// accepted by the worst-case oracle when the ambiguity radius is zero.
    static LossModel unchecked(std::vector<Piece> pieces) {
        require_input(!pieces.empty(), "LossModel: at least one piece required");
        LossModel model;
        model.x_dim_ = pieces.front().x_dim();
        model.xi_dim_ = pieces.front().xi_dim();
        for (const auto& p : pieces) {
            require_dim(p.x_dim(), model.x_dim_, "LossModel piece x-term");
            require_dim(p.xi_dim(), model.xi_dim_, "LossModel piece xi-term");
            model.x_lip_ = std::max(model.x_lip_, p.x_lipschitz());
            model.xi_lip_ = std::max(model.xi_lip_, p.xi_lipschitz());
            model.bounded_ = model.bounded_ && p.bounded_above();
        }
        model.pieces_ = std::move(pieces);
        return model;
    }

    std::size_t size() const { return pieces_.size(); }
    const Piece& piece(std::size_t k) const { return pieces_.at(k); }
    const std::vector<Piece>& pieces() const { return pieces_; }
    Eigen::Index x_dim() const { return x_dim_; }
    Eigen::Index xi_dim() const { return xi_dim_; }
    /// G_X: Lipschitz bound of ℓ(·, ξ).
    double x_lipschitz() const { return x_lip_; }
    /// ‖ℓ‖_lip = max_k γ_k.
    double xi_lipschitz() const { return xi_lip_; }
    bool bounded_above() const { return bounded_; }

    /// Piece values u_k(x), the only way x enters a separable piece.
    std::vector<double> x_constants(const Vector& x) const {
        require_dim(x.size(), x_dim_, "LossModel::x_constants");
        std::vector<double> out;
        out.reserve(pieces_.size());
        for (const auto& p : pieces_) out.push_back(p.x_value(x));
        return out;
    }

private:
    LossModel() = default;

    std::vector<Piece> pieces_;
    Eigen::Index x_dim_ = 0;
    Eigen::Index xi_dim_ = 0;
    double x_lip_ = 0;
    double xi_lip_ = 0;
    bool bounded_ = true;
};

/// Reference family constructor; rejects pieces whose ξ-term grows without bound.
inline LossModel make_separable_loss(std::vector<Piece> pieces) {
    for (std::size_t k = 0; k < pieces.size(); ++k)
        if (!pieces[k].bounded_above())
            throw input_error("make_separable_loss: piece " + std::to_string(k) +
                              " is unbounded above in xi (violates the sublinear growth condition)");
    return LossModel::unchecked(std::move(pieces));
}

/// ℓ(x, ξ) and the index of the maximizing piece (smallest index on ties).
inline LossValue loss_eval(const LossModel& loss, const Vector& x, const Vector& xi) {
    require_dim(x.size(), loss.x_dim(), "loss_eval x");
    require_dim(xi.size(), loss.xi_dim(), "loss_eval xi");
    LossValue best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t k = 0; k < loss.size(); ++k) {
        const double v = loss.piece(k).x_value(x) + loss.piece(k).xi_value(xi);
        if (v > best.value) best = {v, k};
    }
    return best;
}

/// Subgradient of ℓ(·, ξ) at x taken from the argmax piece.
inline Vector loss_subgrad_x(const LossModel& loss, const Vector& x, const Vector& xi) {
    return loss.piece(loss_eval(loss, x, xi).piece).x_subgradient(x);
}

inline Vector project(const DecisionSpace& space, const Vector& y) { return space.project(y); }

// ********************************************************************************
// ***** Ambiguity set and samples ************************************************
// ********************************************************************************

/// 1-Wasserstein ball radius. The transport order is fixed at p = 1.
class AmbiguitySpec {
public:
    explicit AmbiguitySpec(double radius) : radius_(radius) {
        require_input(std::isfinite(radius) && radius >= 0, "AmbiguitySpec: radius must be >= 0");
    }
    double radius() const { return radius_; }
    static constexpr int order = 1;

private:
    double radius_;
};

/// Samples seen so far; the empirical measure puts weight 1/t on each.
class SampleBuffer {
public:
    SampleBuffer() = default;
    explicit SampleBuffer(Eigen::Index dim) : dim_(dim) {}
    explicit SampleBuffer(std::vector<Vector> samples) {
        for (auto& s : samples) push(std::move(s));
    }

    void push(Vector xi) {
        require_input(xi.allFinite(), "SampleBuffer: non-finite sample");
        if (samples_.empty() && dim_ == 0) dim_ = xi.size();
        require_dim(xi.size(), dim_, "SampleBuffer::push");
        samples_.push_back(std::move(xi));
    }

    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    Eigen::Index dim() const { return dim_; }
    const Vector& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<Vector>& samples() const { return samples_; }
    double weight() const { return samples_.empty() ? 0.0 : 1.0 / static_cast<double>(samples_.size()); }

private:
    std::vector<Vector> samples_;
    Eigen::Index dim_ = 0;
};

} // namespace wdro
