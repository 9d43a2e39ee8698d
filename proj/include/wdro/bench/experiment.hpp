#pragma once

// Runs one configured experiment end to end and writes its artifacts.

#include "wdro/bench/io.hpp"
#include "wdro/bench/stream.hpp"

#include <filesystem>
#include <json.hpp>

namespace wdro::bench {

using json = nlohmann::json;

inline json to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

/// Width to which 1-D gap benchmarks polish their grid minimum.
inline constexpr double gap_refine_width = 1e-4;

struct ExperimentResult {
    RunTrace trace;
    Vector comparator;
    std::optional<GapEstimate> gap;
    json summary;
    json report; ///< null unless validation was requested
};

/// Oracle-versus-brute-force comparison for the first rounds of a run.
inline json validation_report(const ExperimentConfig& cfg, const LearnerConfig& lc, const std::vector<Vector>& stream,
                              const RunTrace& trace) {
    json rep;
    rep["rounds"] = json::array();
    const auto K = lc.loss.size();
    const auto m = lc.loss.xi_dim();
    if (K > 3 || m > 2) {
        rep["skipped"] = "brute force limited to K <= 3 pieces and sample dimension <= 2";
        return rep;
    }
    const double bound_base = lc.tolerance.delta;
    const double eta_b = lc.tolerance.eta_b(lc.loss.xi_lipschitz());
    bool ok = true;
    double worst = 0;
    SampleBuffer buffer(m);
    const std::size_t rounds = std::min({cfg.validate_rounds, trace.rounds.size(), std::size_t{4}});
    for (std::size_t t = 1; t <= rounds; ++t) {
        buffer.push(stream[t - 1]);
        const RoundRecord& r = trace.rounds[t - 1];
        const LossAtX at(lc.loss, r.x);
        const OracleResult oracle = wasserstein_oracle(at, buffer, lc.ambiguity, lc.tolerance);
        const BruteForceMaster brute = brute_force_master_detailed(at, buffer, lc.ambiguity.radius());
        const double dev = std::abs(oracle.value - brute.value);
        const double allowed = bound_base + brute.resolution;
        const double w1 = discrete_w1(oracle.distribution, DiscreteDistribution::empirical(buffer));
        const bool round_ok = dev <= allowed && w1 <= lc.ambiguity.radius() + eta_b + 1e-8;
        ok = ok && round_ok;
        worst = std::max(worst, dev);
        rep["rounds"].push_back({{"t", t},
                                 {"oracle", oracle.value},
                                 {"brute_force", brute.value},
                                 {"resolution", brute.resolution},
                                 {"deviation", dev},
                                 {"allowed", allowed},
                                 {"w1", w1},
                                 {"pass", round_ok}});
    }
    rep["max_deviation"] = worst;
    rep["pass"] = ok;
    return rep;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const LearnerConfig lc = build_learner(cfg);
    const std::vector<Vector> stream = generate_stream(cfg.stream, cfg.stream.seed, cfg.horizon);

    std::optional<GapBenchmark> bench;
    if (cfg.gap_enabled || cfg.comparator_kind == "grid") {
        const auto holdout = generate_stream(cfg.stream, cfg.holdout_seed, cfg.holdout_size);
        const std::size_t per_axis = cfg.gap_enabled ? cfg.gap_grid : cfg.comparator_grid;
        bench.emplace(lc.loss, to_buffer(holdout, lc.loss.xi_dim()), lc.ambiguity, lc.space, per_axis, lc.tolerance,
                      gap_refine_width);
    }

    ExperimentResult res;
    if (cfg.comparator_kind == "grid")
        res.comparator = bench->grid_argmin();
    else
        res.comparator = cfg.comparator_x.value_or(lc.start ? lc.space.project(*lc.start) : lc.space.default_start());

    res.trace = run(stream, cfg.horizon, lc, res.comparator);
    if (cfg.gap_enabled) res.gap = bench->estimate(res.trace.x_bar);

    const ToleranceConfig& tol = lc.tolerance;
    const double lip = lc.loss.xi_lipschitz();
    json& s = res.summary;
    s["name"] = cfg.name;
    s["rounds"] = res.trace.rounds.size();
    s["x_bar"] = to_json(res.trace.x_bar);
    s["comparator"] = to_json(res.comparator);
    s["regret_average"] = res.trace.regret_average;
    s["regret_bound"] = res.trace.regret_bound;
    s["diameter"] = lc.space.diameter();
    s["x_lipschitz"] = lc.loss.x_lipschitz();
    s["xi_lipschitz"] = lip;
    s["tolerance"] = {{"delta", tol.delta},
                      {"delta_eval", tol.delta_eval()},
                      {"eta_in", tol.eta_in(lip)},
                      {"eta_b", tol.eta_b(lip)},
                      {"eta_out_cap", tol.eta_out_cap},
                      {"eps_alpha", tol.eps_alpha},
                      {"inner", cfg.inner}};
    if (res.gap) {
        s["gap"] = {{"value", res.gap->gap},
                    {"worst_case_at_x_bar", res.gap->value_at_x},
                    {"benchmark_min", res.gap->grid_min},
                    {"benchmark_argmin", to_json(res.gap->grid_argmin)},
                    {"holdout_size", cfg.holdout_size}};
    } else {
        s["gap"] = nullptr;
    }
    if (cfg.validate) res.report = validation_report(cfg, lc, stream, res.trace);
    return res;
}

inline void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f) throw config_error("cannot write '" + (dir / name).string() + "'");
        return f;
    };
    {
        auto f = open(cfg.trace_path);
        write_trace(f, res.trace, cfg.timing);
    }
    {
        auto f = open(cfg.summary_path);
        f << res.summary.dump(2) << '\n';
    }
    if (!res.report.is_null()) {
        auto f = open(cfg.report_path);
        f << res.report.dump(2) << '\n';
    }
}

} // namespace wdro::bench
