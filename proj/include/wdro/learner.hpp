#pragma once

// Online distributional best response: each round the adversary returns a
// worst-case distribution around the current empirical measure, the learner
// takes one projected subgradient step against it, and iterates are averaged.

#include "wdro/budget.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wdro {

/// η_t = D_X / (G_X √t)
inline double step_size(std::size_t t, double diameter, double x_lipschitz) {
    require_input(t >= 1, "step_size: round index must be >= 1");
    require_input(diameter > 0 && x_lipschitz > 0, "step_size: diameter and Lipschitz bound must be > 0");
    return diameter / (x_lipschitz * std::sqrt(static_cast<double>(t)));
}

struct LearnerConfig {
    LossModel loss;
    DecisionSpace space;
    AmbiguitySpec ambiguity;
    ToleranceConfig tolerance;
    std::optional<Vector> start; ///< x_1; defaults to the projection of the origin
};

struct LearnerState {
    Vector x;     ///< x_t
    Vector x_bar; ///< mean of x_1..x_t
    std::size_t t = 1;
    SampleBuffer buffer;
};

/// Per-round measurements.
struct RoundRecord {
    std::size_t t = 0;
    Vector x;                  ///< decision the adversary responded to
    double loss = 0;           ///< f(x_t, Q_t), computed exactly from Q_t
    double comparator = 0;     ///< f(x°, Q_t); NaN without a comparator
    double oracle_value = 0;   ///< oracle's own estimate of the worst case
    double budget_used = 0;    ///< Σ b̂_i
    double lambda = 0;         ///< λ̂
    double step = 0;           ///< η_t
    double eta_lambda = 0;     ///< bisection floor used this round
    double eta_out = 0;        ///< smallest outer golden floor among the final pair solutions
    double lambda_lip_guess = 0;
    double wall_ms = 0;
    DiscreteDistribution worst_case;
};

class round_error : public std::runtime_error {
public:
    round_error(std::size_t round, const std::string& what)
        : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
    std::size_t round() const { return round_; }

private:
    std::size_t round_;
};

class OnlineLearner {
public:
    explicit OnlineLearner(LearnerConfig config) : config_(std::move(config)) {
        require_dim(config_.space.dim(), config_.loss.x_dim(), "OnlineLearner decision space");
        config_.tolerance.validate(config_.loss.xi_lipschitz());
        Vector x1 = config_.start ? *config_.start : config_.space.default_start();
        require_dim(x1.size(), config_.space.dim(), "OnlineLearner start");
        x1 = config_.space.project(x1);
        state_.x = x1;
        state_.x_bar = x1;
        state_.buffer = SampleBuffer(config_.loss.xi_dim());
    }

    const LearnerState& state() const { return state_; }
    const LearnerConfig& config() const { return config_; }

    /// One round: store ξ, query the oracle at x_t, step, and update the average.
    RoundRecord step(const Vector& xi, const std::optional<Vector>& comparator = std::nullopt) {
        const auto started = std::chrono::steady_clock::now();
        const std::size_t t = state_.t;
        require_dim(xi.size(), config_.loss.xi_dim(), "OnlineLearner::step sample");
        state_.buffer.push(xi);

        RoundRecord rec;
        rec.t = t;
        rec.x = state_.x;
        OracleResult oracle;
        try {
            const LossAtX at(config_.loss, state_.x);
            oracle = wasserstein_oracle(at, state_.buffer, config_.ambiguity, config_.tolerance);
        } catch (const std::exception& e) {
            throw round_error(t, e.what());
        }
        rec.oracle_value = oracle.value;
        rec.budget_used = oracle.allocation.total_budget();
        rec.lambda = oracle.allocation.lambda;
        rec.eta_lambda = oracle.allocation.eta_lambda;
        rec.lambda_lip_guess = oracle.allocation.lambda_lip_guess;
        for (const auto& p : oracle.allocation.pairs)
            if (p.eta_out > 0 && (rec.eta_out == 0 || p.eta_out < rec.eta_out)) rec.eta_out = p.eta_out;
        rec.loss = expected_loss(config_.loss, state_.x, oracle.distribution);
        rec.comparator = comparator ? expected_loss(config_.loss, *comparator, oracle.distribution)
                                    : std::numeric_limits<double>::quiet_NaN();

        const Vector g = expected_subgradient(config_.loss, state_.x, oracle.distribution);
        const double diameter = config_.space.diameter();
        const double lip = config_.loss.x_lipschitz();
        rec.step = diameter > 0 && lip > 0 ? step_size(t, diameter, lip) : 0.0;
        state_.x = config_.space.project(state_.x - rec.step * g);
        const double n = static_cast<double>(t);
        state_.x_bar = (n * state_.x_bar + state_.x) / (n + 1);
        state_.t = t + 1;

        rec.worst_case = std::move(oracle.distribution);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        return rec;
    }

private:
    LearnerConfig config_;
    LearnerState state_;
};

struct RunTrace {
    std::vector<RoundRecord> rounds;
    Vector x_bar;              ///< average of the decisions the adversary saw, x_1..x_T
    double regret_average = 0; ///< (1/T) Σ f(x_t,Q_t) − f(x°,Q_t); NaN without comparator
    double regret_bound = 0;   ///< G_X·D_X·(1 + log T)/√T
};

class truncation_error : public std::runtime_error {
public:
    truncation_error(RunTrace partial, std::size_t horizon)
        : std::runtime_error("stream exhausted after " + std::to_string(partial.rounds.size()) + " of " +
                             std::to_string(horizon) + " rounds"),
          partial_(std::move(partial)) {}
    const RunTrace& partial() const { return partial_; }

private:
    RunTrace partial_;
};

/// G_X·D_X·(1 + log T)/√T
inline double regret_bound(std::size_t horizon, double diameter, double x_lipschitz) {
    const double T = static_cast<double>(horizon);
    return x_lipschitz * diameter * (1 + std::log(T)) / std::sqrt(T);
}

namespace detail {
inline void finish_trace(RunTrace& trace, const Vector& x_bar, const LearnerConfig& cfg, bool has_comparator) {
    trace.x_bar = x_bar;
    const std::size_t T = trace.rounds.size();
    if (T == 0) return;
    double regret = 0;
    for (const auto& r : trace.rounds) regret += r.loss - r.comparator;
    trace.regret_average = has_comparator ? regret / static_cast<double>(T) : std::numeric_limits<double>::quiet_NaN();
    trace.regret_bound = regret_bound(T, cfg.space.diameter(), cfg.loss.x_lipschitz());
}
} // namespace detail

/// Runs `horizon` rounds over the stream. The reported average is over the
/// decisions x_1..x_T that were played; x_{T+1} is computed but never played.
inline RunTrace run(std::span<const Vector> stream, std::size_t horizon, const LearnerConfig& config,
                    const std::optional<Vector>& comparator = std::nullopt, bool keep_distributions = false) {
    require_input(horizon >= 1, "run: horizon must be >= 1");
    OnlineLearner learner(config);
    RunTrace trace;
    Vector sum = Vector::Zero(config.loss.x_dim());
    for (std::size_t t = 1; t <= horizon; ++t) {
        if (t > stream.size()) {
            detail::finish_trace(trace, sum / static_cast<double>(std::max<std::size_t>(trace.rounds.size(), 1)),
                                 config, comparator.has_value());
            throw truncation_error(std::move(trace), horizon);
        }
        RoundRecord rec = learner.step(stream[t - 1], comparator);
        sum += rec.x;
        if (!keep_distributions) rec.worst_case = {};
        trace.rounds.push_back(std::move(rec));
    }
    detail::finish_trace(trace, sum / static_cast<double>(horizon), config, comparator.has_value());
    return trace;
}

} // namespace wdro
