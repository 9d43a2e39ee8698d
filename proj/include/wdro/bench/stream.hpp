#pragma once

#include "wdro/bench/config.hpp"

#include <random>

namespace wdro::bench {

/// Draws `count` samples from the configured family. Sample t depends only
/// on the seed and t, so shorter streams are prefixes of longer ones.
inline std::vector<Vector> generate_stream(const StreamSpec& spec, std::uint64_t seed, std::size_t count) {
    const auto m = static_cast<Eigen::Index>(spec.dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto check = [&](const Vector& v, const char* what) {
        if (v.size() != m) throw config_error(std::string("stream: ") + what + " has the wrong dimension");
    };

    std::vector<Vector> out;
    out.reserve(count);
    if (spec.family == "gaussian") {
        check(spec.mean, "mean");
        check(spec.stddev, "stddev");
        for (std::size_t t = 0; t < count; ++t) {
            Vector z(m);
            for (Eigen::Index j = 0; j < m; ++j) z(j) = spec.mean(j) + spec.stddev(j) * normal(rng);
            out.push_back(std::move(z));
        }
    } else if (spec.family == "uniform") {
        check(spec.lower, "lower");
        check(spec.upper, "upper");
        for (std::size_t t = 0; t < count; ++t) {
            Vector z(m);
            for (Eigen::Index j = 0; j < m; ++j) z(j) = spec.lower(j) + (spec.upper(j) - spec.lower(j)) * unit(rng);
            out.push_back(std::move(z));
        }
    } else if (spec.family == "mixture") {
        if (spec.components.empty()) throw config_error("stream: mixture needs at least one component");
        std::vector<double> weights;
        for (const auto& c : spec.components) {
            check(c.mean, "component mean");
            check(c.stddev, "component stddev");
            if (!(c.weight >= 0)) throw config_error("stream: mixture weights must be >= 0");
            weights.push_back(c.weight);
        }
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        for (std::size_t t = 0; t < count; ++t) {
            const MixtureComponent& c = spec.components[pick(rng)];
            Vector z(m);
            for (Eigen::Index j = 0; j < m; ++j) z(j) = c.mean(j) + c.stddev(j) * normal(rng);
            out.push_back(std::move(z));
        }
    } else {
        throw config_error("stream: unknown family '" + spec.family + "'");
    }
    return out;
}

inline SampleBuffer to_buffer(const std::vector<Vector>& samples, Eigen::Index dim) {
    SampleBuffer b(dim);
    for (const auto& s : samples) b.push(s);
    return b;
}

} // namespace wdro::bench
