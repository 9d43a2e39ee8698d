#pragma once

// Evaluation of the per-sample utility S_i(b): the largest expected loss that
// a single empirical point can reach when split into at most two atoms (one
// per active loss piece) under a transport budget b.

#include "wdro/golden.hpp"
#include "wdro/inner_max.hpp"
#include "wdro/model.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace wdro {

/// Accuracy knobs of the oracle. Floors that depend on the instance (η_out,
/// η_λ) are derived per call from the stored caps and recorded in the results.
struct ToleranceConfig {
    double delta = 1e-3;       ///< oracle accuracy δ
    double eps_alpha = 1e-8;   ///< endpoint clamp for the weight search and atom pruning
    double eta_out_cap = 1e-4; ///< upper cap on the weight-search floor
    std::optional<double> eta_in_override;
    std::optional<double> eta_b_override;
    std::optional<double> eta_lambda_override;
    InnerMethod inner = InnerMethod::exact;
    IterativeOptions iterative{};

    double delta_eval() const { return delta / 2; }

    double eta_in(double lip) const { return eta_in_override.value_or(delta_eval() / positive(lip)); }
    double eta_b(double lip) const { return eta_b_override.value_or(delta_eval() / positive(lip)); }

    /// min(2δ_eval/L_guess, cap) with L_guess = lip·(1 + ‖ξ̂‖ + b).
    double eta_out(double lip, double xi_norm, double budget) const {
        const double l_guess = positive(lip) * (1 + xi_norm + budget);
        return std::min(2 * delta_eval() / l_guess, eta_out_cap);
    }

    /// Dual-sensitivity guess t·lip/ρ used to size the bisection floor.
    static double lambda_lip_guess(double lip, std::size_t t, double radius) {
        return static_cast<double>(t) * positive(lip) / positive(radius);
    }

    double eta_lambda(double lip, std::size_t t, double radius) const {
        const double coupled = eta_b(lip) / lambda_lip_guess(lip, t, radius);
        return eta_lambda_override ? std::min(*eta_lambda_override, coupled) : coupled;
    }

    /// Enforces positivity and the floor couplings against a loss's ξ-Lipschitz bound.
    void validate(double lip) const {
        require_input(std::isfinite(delta) && delta > 0, "tolerance: delta must be > 0");
        require_input(std::isfinite(eps_alpha) && eps_alpha > 0 && eps_alpha < 0.5,
                      "tolerance: eps_alpha must lie in (0, 0.5)");
        require_input(std::isfinite(eta_out_cap) && eta_out_cap > 0, "tolerance: eta_out cap must be > 0");
        const double bound = delta_eval() / positive(lip);
        auto check = [&](const std::optional<double>& v, const char* name, double limit) {
            if (!v) return;
            require_input(std::isfinite(*v) && *v > 0, std::string("tolerance: ") + name + " must be > 0");
            require_input(*v <= limit * (1 + 1e-12),
                          std::string("tolerance: ") + name + " exceeds its coupling bound " + std::to_string(limit));
        };
        check(eta_in_override, "eta_in", bound);
        check(eta_b_override, "eta_b", bound);
        check(eta_lambda_override, "eta_lambda", std::numeric_limits<double>::infinity());
    }

    static ToleranceConfig with_delta(double delta) {
        ToleranceConfig t;
        t.delta = delta;
        return t;
    }

private:
    static double positive(double v) { return std::max(v, 1e-12); }
};

/// Maximizer of one pair subproblem: weights α, budgets β and moves q for
/// pieces k1 < k2 (k1 == k2 only for single-piece losses).
struct PairSolution {
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    std::array<double, 2> alpha{1, 0};
    std::array<double, 2> beta{0, 0};
    std::array<Vector, 2> q;
    double value = 0;
    double eta_out = 0; ///< weight-search floor actually used (0 when no search ran)
};

/// A loss model frozen at a decision x: per-piece constants u_k(x).
struct LossAtX {
    LossAtX(const LossModel& model, Vector x) : model(&model), x(std::move(x)), constants(model.x_constants(this->x)) {}
    LossAtX(LossModel&&, Vector) = delete; // keeps a pointer to the model

    const LossModel* model;
    Vector x;
    std::vector<double> constants;

    std::size_t size() const { return model->size(); }
    const Piece& piece(std::size_t k) const { return model->piece(k); }
    double lip() const { return model->xi_lipschitz(); }
    double value(const Vector& xi) const { return loss_eval(*model, x, xi).value; }
};

namespace detail {

inline PairSolution single_piece_solution(const PerspectiveProblem& p, std::size_t k, double b, Eigen::Index dim) {
    PairSolution s;
    s.k1 = s.k2 = k;
    s.alpha = {1, 0};
    s.beta = {b, 0};
    InnerSolution in = p.solve(1.0, b);
    s.q = {std::move(in.q_star), Vector::Zero(dim)};
    s.value = in.value;
    return s;
}

/// Nested golden-section evaluation of one pair, given prepared pieces.
inline PairSolution eval_pair_prepared(const PerspectiveProblem& p1, const PerspectiveProblem& p2, std::size_t k1,
                                       std::size_t k2, double b, double xi_norm, double lip,
                                       const ToleranceConfig& tol, Eigen::Index dim) {
    require_input(std::isfinite(b) && b >= 0, "eval_pair: budget must be >= 0");

    // Endpoints α₁ ∈ {1, 0}: the idle piece keeps zero budget and zero move.
    const double v_first = p1.value(1.0, b);
    const double v_second = p2.value(1.0, b);
    double best_value = v_first;
    double best_alpha = 1;
    double best_beta = b;
    if (v_second > best_value) {
        best_value = v_second;
        best_alpha = 0;
        best_beta = 0;
    }

    // Interior mixtures are α-weighted sums of the two pieces, so they can
    // never beat an endpoint that already reaches the larger supremum.
    const bool saturated =
        tol.inner == InnerMethod::exact && best_value >= std::max(p1.supremum(), p2.supremum());
    double eta_out = 0;
    if (b > 0 && !saturated) {
        eta_out = tol.eta_out(lip, xi_norm, b);
        const double eta_in = tol.eta_in(lip);
        double interior_alpha = 0, interior_beta = 0;
        double interior_value = -std::numeric_limits<double>::infinity();
        const bool exact = tol.inner == InnerMethod::exact;
        auto inner = [&](double a1) {
            const double a2 = 1 - a1;
            auto f = [&](double b1) { return p1.value(a1, b1) + p2.value(a2, std::max(b - b1, 0.0)); };
            // Each piece gains nothing past its saturation budget, so the
            // maximizer lies in [b − sat₂, sat₁].
            double lo = 0, hi = b;
            if (exact) {
                lo = std::max(0.0, b - p2.saturation(a2));
                hi = std::min(b, p1.saturation(a1));
            }
            GoldenResult r;
            if (lo >= hi) {
                r.best_point = std::min(hi, b);
                r.best_value = f(r.best_point);
            } else {
                r = golden_section_max(f, lo, hi, eta_in, GoldenTies::keep_right);
            }
            if (r.best_value > interior_value) {
                interior_value = r.best_value;
                interior_alpha = a1;
                interior_beta = r.best_point;
            }
            return r.best_value;
        };
        golden_section_max(inner, tol.eps_alpha, 1 - tol.eps_alpha, eta_out, GoldenTies::keep_right);
        if (interior_value > best_value) {
            best_value = interior_value;
            best_alpha = interior_alpha;
            best_beta = interior_beta;
        }
    }

    PairSolution s;
    s.k1 = k1;
    s.k2 = k2;
    s.eta_out = eta_out;
    s.alpha = {best_alpha, 1 - best_alpha};
    s.beta = {best_beta, std::max(b - best_beta, 0.0)};
    if (best_alpha == 1) s.beta = {b, 0};
    if (best_alpha == 0) s.beta = {0, b};
    double total = 0;
    for (int j = 0; j < 2; ++j) {
        if (s.alpha[j] > 0) {
            const PerspectiveProblem& p = j == 0 ? p1 : p2;
            InnerSolution in = p.solve(s.alpha[j], s.beta[j]);
            total += in.value;
            s.q[j] = std::move(in.q_star);
        } else {
            s.q[j] = Vector::Zero(dim);
        }
    }
    // The iterative route may return a slightly different maximizer on the
    // re-solve; report the value of the solution actually stored.
    s.value = total;
    return s;
}

} // namespace detail

/// S_i^{(k1,k2)}(b) for the empirical point ξ̂: exact endpoints α₁ ∈ {0, 1}
/// plus a nested golden-section search over α₁ ∈ [ε_α, 1 − ε_α] (outer) and
/// β₁ ∈ [0, b] (inner).
inline PairSolution eval_pair(const LossAtX& loss, const Vector& xi_hat, std::size_t k1, std::size_t k2, double b,
                              const ToleranceConfig& tol) {
    require_input(k1 < k2 && k2 < loss.size(), "eval_pair: requires piece indices k1 < k2 < K");
    require_input(std::isfinite(b) && b >= 0, "eval_pair: budget must be >= 0");
    require_dim(xi_hat.size(), loss.model->xi_dim(), "eval_pair xi_hat");
    const double eps = tol.delta_eval() / 2;
    const PerspectiveProblem p1(loss.piece(k1), xi_hat, loss.constants[k1], tol.inner, eps, tol.iterative);
    const PerspectiveProblem p2(loss.piece(k2), xi_hat, loss.constants[k2], tol.inner, eps, tol.iterative);
    return detail::eval_pair_prepared(p1, p2, k1, k2, b, xi_hat.norm(), loss.lip(), tol, xi_hat.size());
}

/// Value of S_i(b) together with the maximizing pair.
struct UtilityValue {
    double value = 0;
    PairSolution best;
};

/// S_i(b) for one empirical point, with the prepared per-piece problems kept
/// alive across many budgets.
class SampleUtility {
public:
    SampleUtility(const LossAtX& loss, const Vector& xi_hat, const ToleranceConfig& tol)
        : loss_(&loss), xi_hat_(&xi_hat), tol_(tol), xi_norm_(xi_hat.norm()) {
        require_dim(xi_hat.size(), loss.model->xi_dim(), "SampleUtility xi_hat");
        const double eps = tol.delta_eval() / 2;
        problems_.reserve(loss.size());
        for (std::size_t k = 0; k < loss.size(); ++k)
            problems_.emplace_back(loss.piece(k), xi_hat, loss.constants[k], tol.inner, eps, tol.iterative);
    }

    UtilityValue eval(double b) const {
        require_input(std::isfinite(b) && b >= 0, "eval_S: budget must be >= 0");
        const std::size_t K = problems_.size();
        const Eigen::Index dim = xi_hat_->size();
        if (b == 0) return at_zero();
        if (K == 1) {
            PairSolution s = detail::single_piece_solution(problems_[0], 0, b, dim);
            return {s.value, std::move(s)};
        }
        UtilityValue out;
        out.value = -std::numeric_limits<double>::infinity();
        for (std::size_t k1 = 0; k1 + 1 < K; ++k1)
            for (std::size_t k2 = k1 + 1; k2 < K; ++k2) {
                PairSolution s = detail::eval_pair_prepared(problems_[k1], problems_[k2], k1, k2, b, xi_norm_,
                                                            loss_->lip(), tol_, dim);
                if (s.value > out.value) {
                    out.value = s.value;
                    out.best = std::move(s);
                }
            }
        return out;
    }

    const Vector& point() const { return *xi_hat_; }
    const ToleranceConfig& tolerance() const { return tol_; }
    double lip() const { return loss_->lip(); }

private:
    // Zero budget pins the atom at ξ̂; the pair holds the argmax piece.
    UtilityValue at_zero() const {
        const Eigen::Index dim = xi_hat_->size();
        std::size_t arg = 0;
        double best = problems_[0].at_center();
        for (std::size_t k = 1; k < problems_.size(); ++k) {
            const double v = problems_[k].at_center();
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        PairSolution s;
        s.q = {Vector::Zero(dim), Vector::Zero(dim)};
        s.value = best;
        if (problems_.size() == 1) {
            s.k1 = s.k2 = 0;
        } else if (arg == 0) {
            s.k1 = 0;
            s.k2 = 1;
        } else {
            s.k1 = 0;
            s.k2 = arg;
            s.alpha = {0, 1};
        }
        return {best, std::move(s)};
    }

    const LossAtX* loss_;
    const Vector* xi_hat_;
    ToleranceConfig tol_;
    double xi_norm_;
    std::vector<PerspectiveProblem> problems_;
};

/// S_i(b) = max over pairs k1 < k2 of S_i^{(k1,k2)}(b); ties go to the
/// lexicographically smallest pair.
inline UtilityValue eval_S(const LossAtX& loss, const Vector& xi_hat, double b, const ToleranceConfig& tol) {
    return SampleUtility(loss, xi_hat, tol).eval(b);
}

} // namespace wdro
