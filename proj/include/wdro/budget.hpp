#pragma once

// Worst-case expectation over a 1-Wasserstein ball around the empirical
// measure, solved as a budget allocation: the transport budget ρt is split
// across per-sample utilities S_i by bisection on its shadow price λ, each
// decoupled problem max_b S_i(b) − λb solved by golden-section search.

#include "wdro/distribution.hpp"
#include "wdro/golden.hpp"
#include "wdro/oracle_pairs.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace wdro {

/// S_i(b) with memoized evaluations. Golden-section probes repeat exactly
/// across dual candidates, so the cache is hit often within one oracle call.
class CachedUtility {
public:
    CachedUtility(const LossAtX& loss, const Vector& xi_hat, const ToleranceConfig& tol) : utility_(loss, xi_hat, tol) {}

    const UtilityValue& eval(double b) const {
        auto it = cache_.find(b);
        if (it == cache_.end()) it = cache_.emplace(b, utility_.eval(b)).first;
        return it->second;
    }

    double lip() const { return utility_.lip(); }
    const ToleranceConfig& tolerance() const { return utility_.tolerance(); }
    std::size_t evaluations() const { return cache_.size(); }

private:
    SampleUtility utility_;
    mutable std::map<double, UtilityValue> cache_;
};

struct SubproblemSolution {
    double budget = 0;    ///< b̂
    double utility = 0;   ///< Ŝ_i(b̂)
    double objective = 0; ///< Ŝ_i(b̂) − λb̂
    PairSolution pair;
};

/// argmax_{b ∈ [0, cap]} S_i(b) − λb by golden-section search with floor
/// η_b, returning the lower bracket end. Any λ ≥ ‖ℓ‖_lip makes b = 0 optimal.
inline SubproblemSolution solve_subproblem(const CachedUtility& u, double lambda, double cap) {
    require_input(std::isfinite(lambda) && lambda >= 0, "solve_subproblem: lambda must be >= 0");
    require_input(std::isfinite(cap) && cap >= 0, "solve_subproblem: budget cap must be >= 0");
    double b_hat = 0;
    if (lambda < u.lip() && cap > 0) {
        const double floor = u.tolerance().eta_b(u.lip());
        GoldenResult r = golden_section_max([&](double b) { return u.eval(b).value - lambda * b; }, 0.0, cap, floor,
                                            GoldenTies::keep_left);
        b_hat = r.low;
    }
    const UtilityValue& at = u.eval(b_hat);
    return {b_hat, at.value, at.value - lambda * b_hat, at.best};
}

inline SubproblemSolution solve_subproblem(const LossAtX& loss, const Vector& xi_hat, double lambda, double cap,
                                           const ToleranceConfig& tol) {
    return solve_subproblem(CachedUtility(loss, xi_hat, tol), lambda, cap);
}

struct BudgetAllocation {
    std::vector<double> budgets;     ///< b̂_i
    std::vector<PairSolution> pairs; ///< maximizer of S_i at b̂_i
    std::vector<double> utilities;   ///< Ŝ_i(b̂_i)
    double lambda = 0;               ///< λ̂
    double objective = 0;            ///< (1/t) Σ Ŝ_i(b̂_i)
    bool nonbinding = false;         ///< the λ = 0 allocation already fit the budget
    double mix = 0;                  ///< weight on the λ_low allocation in the returned budgets
    std::size_t bisection_steps = 0;
    double eta_lambda = 0;
    double lambda_lip_guess = 0;

    double total_budget() const { return std::accumulate(budgets.begin(), budgets.end(), 0.0); }
};

/// The master allocation problem for one decision and one empirical buffer.
class BudgetProblem {
public:
    BudgetProblem(const LossAtX& loss, const SampleBuffer& samples, const AmbiguitySpec& amb,
                  const ToleranceConfig& tol)
        : loss_(&loss), samples_(&samples), radius_(amb.radius()), tol_(tol) {
        require_input(!samples.empty(), "allocate_budget: at least one sample required");
        require_dim(samples.dim(), loss.model->xi_dim(), "allocate_budget samples");
        utilities_.reserve(samples.size());
        for (const auto& xi : samples.samples()) utilities_.emplace_back(loss, xi, tol);
    }

    std::size_t size() const { return utilities_.size(); }
    double budget_cap() const { return radius_ * static_cast<double>(utilities_.size()); }
    const CachedUtility& utility(std::size_t i) const { return utilities_[i]; }

    /// Decoupled solutions b̂_i(λ) for every sample.
    std::vector<SubproblemSolution> at_lambda(double lambda) const {
        std::vector<SubproblemSolution> out;
        out.reserve(utilities_.size());
        for (const auto& u : utilities_) out.push_back(solve_subproblem(u, lambda, budget_cap()));
        return out;
    }


    static double total(const std::vector<SubproblemSolution>& sols) {
        double s = 0;
        for (const auto& x : sols) s += x.budget;
        return s;
    }

    /// Probes λ = 0 first; otherwise bisects λ on [0, ‖ℓ‖_lip] keeping the
    /// upper end budget-feasible. Budget left unused by the upper end's
    /// allocation is filled by moving toward the lower end's allocation: when
    /// some S_i is linear near λ̂ the decoupled response jumps, and the upper
    /// end alone can leave most of ρt unspent.
    BudgetAllocation solve() const {
        const std::size_t t = utilities_.size();
        const double cap = budget_cap();
        const double lip = loss_->lip();
        BudgetAllocation out;
        out.lambda_lip_guess = ToleranceConfig::lambda_lip_guess(lip, t, radius_);
        out.eta_lambda = tol_.eta_lambda(lip, t, radius_);

        std::vector<SubproblemSolution> chosen = at_lambda(0.0);
        if (total(chosen) <= cap) {
            out.nonbinding = true;
        } else {
            double low = 0, high = lip;
            std::vector<SubproblemSolution> lower = std::move(chosen);
            chosen = at_lambda(high);
            while (high - low > out.eta_lambda) {
                const double mid = 0.5 * (low + high);
                std::vector<SubproblemSolution> sols = at_lambda(mid);
                ++out.bisection_steps;
                if (total(sols) > cap) {
                    low = mid;
                    lower = std::move(sols);
                } else {
                    high = mid;
                    chosen = std::move(sols);
                }
            }
            out.lambda = high;
            out.mix = fill_residual(chosen, lower, cap, high);
        }

        double sum = 0;
        for (auto& s : chosen) {
            out.budgets.push_back(s.budget);
            out.utilities.push_back(s.utility);
            sum += s.utility;
            out.pairs.push_back(std::move(s.pair));
        }
        out.objective = sum / static_cast<double>(t);
        return out;
    }

private:
    /// Moves `high` toward `low` along the segment between the two allocations
    /// until the budget is used up. Returns the weight on `low`.
    double fill_residual(std::vector<SubproblemSolution>& high, const std::vector<SubproblemSolution>& low,
                         double cap, double lambda) const {
        const double used = total(high);
        const double gap = total(low) - used;
        if (!(gap > 0) || used >= cap) return 0;
        const double theta = std::min(1.0, (cap - used) / gap);
        for (std::size_t i = 0; i < high.size(); ++i) {
            const double b = high[i].budget + theta * (low[i].budget - high[i].budget);
            if (b == high[i].budget) continue;
            const UtilityValue& at = utilities_[i].eval(b);
            high[i] = {b, at.value, at.value - lambda * b, at.best};
        }
        return theta;
    }

    const LossAtX* loss_;
    const SampleBuffer* samples_;
    double radius_;
    ToleranceConfig tol_;
    std::vector<CachedUtility> utilities_;
};

inline BudgetAllocation allocate_budget(const LossAtX& loss, const SampleBuffer& samples, const AmbiguitySpec& amb,
                                        const ToleranceConfig& tol) {
    require_input(!samples.empty(), "allocate_budget: t must be >= 1");
    return BudgetProblem(loss, samples, amb, tol).solve();
}

/// Builds the discrete worst case from an allocation: sample i contributes
/// atoms ξ̂_i − q_j/α_j with weight α_j/t for each component with α_j ≥ ε_α;
/// the weight of a pruned component moves to the surviving atom of sample i.
inline DiscreteDistribution assemble_worst_case(const SampleBuffer& samples, const BudgetAllocation& allocation,
                                                double eps_alpha = 1e-8) {
    const std::size_t t = samples.size();
    if (allocation.pairs.size() != t || allocation.budgets.size() != t)
        throw numeric_error("assemble_worst_case: allocation does not match the sample buffer (" +
                            std::to_string(allocation.pairs.size()) + " pair solutions for " + std::to_string(t) +
                            " samples)");
    const double w = 1.0 / static_cast<double>(t);
    DiscreteDistribution q;
    for (std::size_t i = 0; i < t; ++i) {
        const PairSolution& p = allocation.pairs[i];
        const bool keep0 = p.alpha[0] >= eps_alpha;
        const bool keep1 = p.alpha[1] >= eps_alpha && p.k2 != p.k1;
        if (!keep0 && !keep1) throw numeric_error("assemble_worst_case: pair solution has no active component");
        for (int j = 0; j < 2; ++j) {
            if (!(j == 0 ? keep0 : keep1)) continue;
            if (p.q[j].size() != samples[i].size()) throw numeric_error("assemble_worst_case: malformed pair solution");
            const double weight = (keep0 && keep1) ? p.alpha[j] : 1.0;
            q.add(samples[i] - p.q[j] / p.alpha[j], weight * w);
        }
    }
    return q;
}

struct OracleResult {
    DiscreteDistribution distribution;
    double value = 0;
    BudgetAllocation allocation;
};

/// δ-accurate worst-case expectation max_{W₁(Q, P̂_t) ≤ ρ} E_Q[ℓ(x, ·)],
/// with δ_eval = δ/2 driving every inner tolerance.
inline OracleResult wasserstein_oracle(const LossAtX& loss, const SampleBuffer& samples, const AmbiguitySpec& amb,
                                       const ToleranceConfig& tol) {
    tol.validate(loss.lip());
    require_input(amb.radius() == 0 || loss.model->bounded_above(),
                  "wasserstein_oracle: loss pieces must be bounded above in xi when the radius is positive");
    OracleResult out;
    out.allocation = allocate_budget(loss, samples, amb, tol);
    out.distribution = assemble_worst_case(samples, out.allocation, tol.eps_alpha);
    out.value = out.allocation.objective;
    return out;
}

} // namespace wdro
