// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include "wdro/bench/experiment.hpp"
#include "wdro/bench/instances.hpp"
#include "wdro/bench/stream.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <string>

using namespace wdro;
using namespace wdro::bench;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const ToleranceConfig tol = ToleranceConfig::with_delta(1e-3);

ExperimentConfig reference_config() { return load_config(std::string(WDRO_CONFIG_DIR) + "/ref1d.cfg"); }

// 1 and 2 share one instance sweep.
struct Sweep {
    std::size_t instances = 0, value_failures = 0, w1_failures = 0;
    double worst_excess = -1e300, worst_w1_excess = -1e300, secs = 0;
};

const Sweep& instance_sweep() {
    static const Sweep sweep = [] {
        Sweep s;
        std::mt19937_64 rng(20240601);
        const auto t0 = Clock::now();
        for (; s.instances < 200; ++s.instances) {
            const RandomInstance inst = random_instance(rng);
            const LossAtX at(inst.loss, inst.x);
            const OracleResult r = wasserstein_oracle(at, inst.samples, AmbiguitySpec(inst.radius), tol);
            const BruteForceMaster b = brute_force_master_detailed(at, inst.samples, inst.radius);
            const double excess = std::abs(r.value - b.value) - (tol.delta + b.resolution);
            s.worst_excess = std::max(s.worst_excess, excess);
            s.value_failures += excess > 0;
            const double w1 = discrete_w1(r.distribution, DiscreteDistribution::empirical(inst.samples));
            const double w1_excess = w1 - (inst.radius + tol.eta_b(inst.loss.xi_lipschitz()) + 1e-8);
            s.worst_w1_excess = std::max(s.worst_w1_excess, w1_excess);
            s.w1_failures += w1_excess > 0;
        }
        s.secs = seconds_since(t0);
        return s;
    }();
    return sweep;
}

Outcome oracle_equivalence() {
    const Sweep& s = instance_sweep();
    const bool pass = s.value_failures == 0 && s.secs < 300;
    return {pass, fmt("%zu instances, %zu outside delta + resolution (worst margin %.3g), %.1f s", s.instances,
                      s.value_failures, s.worst_excess, s.secs)};
}

Outcome transport_feasibility() {
    const Sweep& s = instance_sweep();
    return {s.w1_failures == 0,
            fmt("%zu instances, %zu W1 violations (worst margin %.3g)", s.instances, s.w1_failures, s.worst_w1_excess)};
}

Outcome utility_structure() {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0, 2);
    const double de = tol.delta_eval();
    std::size_t triples = 0, mono = 0, concave = 0, lipschitz = 0;
    for (; triples < 120; ++triples) {
        const RandomInstance inst = random_instance(rng);
        const LossAtX at(inst.loss, inst.x);
        const SampleUtility su(at, inst.samples[0], tol);
        double b1 = u(rng), b2 = u(rng);
        if (b1 > b2) std::swap(b1, b2);
        const double s1 = su.eval(b1).value, s2 = su.eval(b2).value, sm = su.eval((b1 + b2) / 2).value;
        mono += s2 < s1 - 8 * de;
        concave += sm < (s1 + s2) / 2 - 12 * de;
        lipschitz += std::abs(s2 - s1) > inst.loss.xi_lipschitz() * (b2 - b1) + 8 * de;
    }
    return {mono + concave + lipschitz == 0,
            fmt("%zu triples; violations: monotone %zu, midpoint concave %zu, Lipschitz %zu", triples, mono, concave,
                lipschitz)};
}

Outcome dual_monotonicity() {
    std::mt19937_64 rng(78);
    std::size_t checks = 0, violations = 0;
    for (int n = 0; n < 50; ++n) {
        const RandomInstance inst = random_instance(rng);
        const LossAtX at(inst.loss, inst.x);
        const double radius = inst.radius > 0 ? inst.radius : 0.5;
        const BudgetProblem prob(at, inst.samples, AmbiguitySpec(radius), tol);
        const double lip = inst.loss.xi_lipschitz();
        const double slack = 2 * double(inst.samples.size()) * tol.eta_b(lip);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 40; ++k) {
            const double total = BudgetProblem::total(prob.at_lambda(lip * k / 40.0));
            violations += total > prev + slack;
            ++checks;
            prev = total;
        }
    }
    return {violations == 0, fmt("%zu grid steps over 50 instances, %zu increases beyond 2t*eta_b", checks, violations)};
}

// Best fixed decision in hindsight against the adversary's distributions.
double hindsight_min(const LossModel& loss, const std::vector<RoundRecord>& rounds, std::size_t T) {
    auto total = [&](double x) {
        double s = 0;
        for (std::size_t t = 0; t < T; ++t) s += expected_loss(loss, Vector::Constant(1, x), rounds[t].worst_case);
        return s;
    };
    double best_x = -1, best = total(-1);
    for (int i = 1; i <= 200; ++i) {
        const double x = -1 + 2.0 * i / 200, v = total(x);
        if (v < best) best = v, best_x = x;
    }
    const GoldenResult g = golden_section_max([&](double x) { return -total(x); }, std::max(-1.0, best_x - 0.01),
                                              std::min(1.0, best_x + 0.01), 1e-9);
    return std::min(best, -g.best_value);
}

Outcome regret_bound_check() {
    ExperimentConfig cfg = reference_config();
    cfg.horizon = 400;
    const LearnerConfig lc = build_learner(cfg);
    const auto stream = generate_stream(cfg.stream, cfg.stream.seed, cfg.horizon);
    const auto t0 = Clock::now();
    const RunTrace trace = run(stream, cfg.horizon, lc, std::nullopt, true);
    std::string detail;
    bool pass = true;
    double cumulative = 0;
    std::size_t next = 0;
    const std::size_t checkpoints[] = {50, 100, 200, 400};
    for (std::size_t t = 0; t < trace.rounds.size(); ++t) {
        cumulative += trace.rounds[t].loss;
        if (t + 1 != checkpoints[next]) continue;
        const std::size_t T = t + 1;
        const double regret = (cumulative - hindsight_min(lc.loss, trace.rounds, T)) / double(T);
        const double bound = regret_bound(T, lc.space.diameter(), lc.loss.x_lipschitz()) + 2 * tol.delta;
        pass = pass && regret <= bound;
        detail += fmt("T=%zu regret %.4f <= %.4f; ", T, regret, bound);
        if (++next == std::size(checkpoints)) break;
    }
    const double secs = seconds_since(t0);
    pass = pass && secs < 120;
    return {pass, detail + fmt("%.1f s", secs)};
}

// Least-squares slope of log y against log x.
double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome rate_check() {
    const ExperimentConfig cfg = reference_config();
    const LearnerConfig lc = build_learner(cfg);
    const auto t0 = Clock::now();
    const auto holdout = generate_stream(cfg.stream, cfg.holdout_seed, 10000);
    const GapBenchmark bench(lc.loss, to_buffer(holdout, 1), lc.ambiguity, lc.space, 21, lc.tolerance,
                             gap_refine_width);
    const std::vector<std::size_t> horizons = {50, 100, 200, 400, 800};
    std::vector<double> mean_gap(horizons.size(), 0.0);
    const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
    for (std::uint64_t seed : seeds) {
        const auto stream = generate_stream(cfg.stream, seed, horizons.back());
        const RunTrace trace = run(stream, horizons.back(), lc);
        double sum = 0;
        std::size_t next = 0;
        for (std::size_t t = 0; t < trace.rounds.size() && next < horizons.size(); ++t) {
            sum += trace.rounds[t].x(0);
            if (t + 1 != horizons[next]) continue;
            const double gap = bench.estimate(Vector::Constant(1, sum / double(t + 1))).gap;
            // The refined minimum can sit a hair above a lucky query point.
            mean_gap[next] += std::max(gap, 1e-9) / double(std::size(seeds));
            ++next;
        }
    }
    std::vector<double> xs(horizons.begin(), horizons.end());
    const double slope = log_slope(xs, mean_gap);
    std::string detail = "seed-mean gap";
    for (std::size_t i = 0; i < horizons.size(); ++i) detail += fmt(" T=%zu:%.3g", horizons[i], mean_gap[i]);
    return {slope <= -0.35, detail + fmt("; slope %.3f (need <= -0.35), %.0f s", slope, seconds_since(t0))};
}

Outcome zero_radius_degeneration() {
    const ExperimentConfig cfg = reference_config();
    LearnerConfig lc = build_learner(cfg);
    lc.ambiguity = AmbiguitySpec(0);
    double worst = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto stream = generate_stream(cfg.stream, seed, 100);
        const RunTrace trace = run(stream, 100, lc);
        // Standalone projected subgradient descent on the running empirical loss.
        double x = lc.space.default_start()(0);
        for (std::size_t t = 1; t <= 100; ++t) {
            worst = std::max(worst, std::abs(trace.rounds[t - 1].x(0) - x));
            double g = 0;
            for (std::size_t i = 0; i < t; ++i) {
                const double xi = stream[i](0);
                g += (x - std::abs(xi - 1) >= -x - std::abs(xi + 1)) ? 1.0 : -1.0;
            }
            g /= double(t);
            x = std::clamp(x - 2.0 / std::sqrt(double(t)) * g, -1.0, 1.0);
        }
    }
    return {worst <= 1e-10, fmt("3 seeds x 100 rounds, max iterate difference %.3g", worst)};
}

Outcome validator_consistency() {
    std::mt19937_64 rng(79);
    std::uniform_real_distribution<double> u(0, 1);
    auto random_dist = [&](Eigen::Index m) {
        DiscreteDistribution d;
        const std::size_t n = 1 + std::size_t(u(rng) * 5);
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Vector a(m);
            for (Eigen::Index j = 0; j < m; ++j) a(j) = 4 * u(rng) - 2;
            d.add(std::move(a), 0.1 + u(rng));
            sum += d.weights.back();
        }
        for (double& w : d.weights) w /= sum;
        return d;
    };
    std::size_t axiom_failures = 0;
    for (int n = 0; n < 100; ++n) {
        const Eigen::Index m = n % 2 ? 2 : 1;
        const auto p = random_dist(m), q = random_dist(m), r = random_dist(m);
        const double pq = discrete_w1(p, q);
        axiom_failures += std::abs(pq - discrete_w1(q, p)) > 1e-8;
        axiom_failures += pq < -1e-8;
        axiom_failures += discrete_w1(p, p) > 1e-8;
        axiom_failures += pq > discrete_w1(p, r) + discrete_w1(r, q) + 1e-8;
    }
    double worst_fd = 0;
    for (int n = 0; n < 100; ++n) {
        const Eigen::Index m = n % 2 ? 2 : 1;
        Vector c(m), xi(m);
        for (Eigen::Index j = 0; j < m; ++j) c(j) = 4 * u(rng) - 2, xi(j) = 4 * u(rng) - 2;
        const Piece p(AffineTerm{Vector::Zero(1), 0}, SmoothConeTerm{2 * u(rng) - 1, 0.5 + 1.5 * u(rng), c});
        worst_fd = std::max(worst_fd, finite_diff_check(p, xi, 1e-5));
    }
    return {axiom_failures == 0 && worst_fd <= 1e-6,
            fmt("100 triples, %zu axiom violations; max finite-difference deviation %.3g", axiom_failures, worst_fd)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"oracle equivalence", oracle_equivalence},
        {"transport feasibility", transport_feasibility},
        {"utility structure", utility_structure},
        {"dual monotonicity", dual_monotonicity},
        {"regret bound", regret_bound_check},
        {"rate check", rate_check},
        {"zero-radius degeneration", zero_radius_degeneration},
        {"validator self-consistency", validator_consistency},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
