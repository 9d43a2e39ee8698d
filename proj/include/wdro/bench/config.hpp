#pragma once

// Experiment configuration: flat `key = value` text with dotted section keys.
// Vectors are whitespace-separated numbers; `#` starts a comment.

#include "wdro/learner.hpp"
#include "wdro/reference.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace wdro::bench {

struct PieceSpec {
    std::string x_kind = "affine"; ///< affine | absdev
    Vector x_slope;                ///< affine slope or absdev direction
    double x_offset = 0;           ///< affine intercept or absdev offset
    double x_scale = 1;            ///< absdev only
    std::string xi_kind = "cone";  ///< cone | smooth | linear
    double xi_height = 0;
    double xi_gamma = 1;
    Vector xi_center; ///< cone and smooth
    Vector xi_slope;  ///< linear
};

struct MixtureComponent {
    double weight = 1;
    Vector mean;
    Vector stddev;
};

struct StreamSpec {
    std::string family = "gaussian"; ///< gaussian | uniform | mixture
    std::size_t dim = 1;
    std::uint64_t seed = 1;
    Vector mean;   ///< gaussian
    Vector stddev; ///< gaussian
    Vector lower;  ///< uniform
    Vector upper;  ///< uniform
    std::vector<MixtureComponent> components;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<PieceSpec> pieces;
    bool allow_unbounded = false;

    std::string space_kind = "box"; ///< box | ball
    Vector space_lower, space_upper, space_center;
    double space_radius = 0;
    std::optional<Vector> start;

    double radius = 0;
    std::size_t horizon = 1;

    double delta = 1e-3;
    double eps_alpha = 1e-8;
    double eta_out_cap = 1e-4;
    std::optional<double> eta_in, eta_b, eta_lambda;
    std::string inner = "exact"; ///< exact | iterative
    std::size_t max_iterations = 2'000'000;

    StreamSpec stream;

    std::string comparator_kind = "fixed"; ///< fixed | grid
    std::optional<Vector> comparator_x;    ///< fixed; defaults to the start point
    std::size_t comparator_grid = 41;

    std::size_t holdout_size = 10000;
    std::uint64_t holdout_seed = 1001;
    bool gap_enabled = false;
    std::size_t gap_grid = 41;

    bool validate = false;
    std::size_t validate_rounds = 4;
    std::size_t validate_instances = 20;

    std::string trace_path = "trace.tsv";
    std::string summary_path = "summary.json";
    std::string report_path = "report.json";
    bool timing = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(const Vector& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ' ';
        out += fmt(v(i));
    }
    return out;
}

/// Key/value store that remembers which keys were consumed.
class KeyValues {
public:
    explicit KeyValues(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("config line " + std::to_string(lineno) + ": expected 'key = value'");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
            if (!values_.emplace(key, value).second) throw config_error("config: duplicate key '" + key + "'");
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::optional<std::string> raw(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        used_.insert(key);
        return it->second;
    }

    std::string text(const std::string& key, const std::string& fallback) { return raw(key).value_or(fallback); }

    std::string required_text(const std::string& key) {
        auto v = raw(key);
        if (!v) throw config_error("config: missing required key '" + key + "'");
        return *v;
    }

    double number(const std::string& key, double fallback) {
        auto v = raw(key);
        return v ? parse_number(key, *v) : fallback;
    }

    std::optional<double> optional_number(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        return parse_number(key, *v);
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        auto v = raw(key);
        if (!v) return fallback;
        try {
            std::size_t pos = 0;
            if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
            const unsigned long long n = std::stoull(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("trailing");
            return n;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' expects a nonnegative integer, got '" + *v + "'");
        }
    }

    bool flag(const std::string& key, bool fallback) {
        auto v = raw(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw config_error("config: key '" + key + "' expects true/false, got '" + *v + "'");
    }

    std::optional<Vector> vector(const std::string& key) {
        auto v = raw(key);
        if (!v) return std::nullopt;
        std::istringstream in(*v);
        std::vector<double> xs;
        std::string tok;
        while (in >> tok) xs.push_back(parse_number(key, tok));
        if (xs.empty()) throw config_error("config: key '" + key + "' expects at least one number");
        return Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    }

    Vector required_vector(const std::string& key) {
        auto v = vector(key);
        if (!v) throw config_error("config: missing required key '" + key + "'");
        return *v;
    }

    void reject_unused() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw config_error("config: unknown key '" + k + "'");
    }

private:
    static double parse_number(const std::string& key, const std::string& s) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw config_error("config: key '" + key + "' expects a number, got '" + s + "'");
        }
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

} // namespace detail

LossModel build_loss(const ExperimentConfig& cfg);
DecisionSpace build_space(const ExperimentConfig& cfg);
ToleranceConfig build_tolerance(const ExperimentConfig& cfg);

/// Cross-field checks; throws config_error.
inline void validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& m) { throw config_error("config: " + m); };
    if (!(std::isfinite(cfg.radius) && cfg.radius >= 0)) fail("ambiguity.radius must be >= 0");
    if (cfg.horizon < 1) fail("run.horizon must be >= 1");
    if (cfg.pieces.empty()) fail("loss.pieces must be >= 1");
    if (cfg.inner != "exact" && cfg.inner != "iterative") fail("tolerance.inner must be exact or iterative");
    if (cfg.comparator_kind != "fixed" && cfg.comparator_kind != "grid")
        fail("comparator.kind must be fixed or grid");
    if (cfg.stream.dim < 1) fail("stream.dim must be >= 1");
    if (cfg.validate_rounds > 4) fail("validate.rounds must be <= 4");
    try {
        const LossModel loss = build_loss(cfg);
        const DecisionSpace space = build_space(cfg);
        if (space.dim() != loss.x_dim()) fail("decision space dimension does not match the loss");
        if (static_cast<Eigen::Index>(cfg.stream.dim) != loss.xi_dim())
            fail("stream.dim does not match the loss sample dimension");
        if (cfg.radius > 0 && !loss.bounded_above())
            fail("loss pieces unbounded above in xi require ambiguity.radius = 0");
        build_tolerance(cfg).validate(loss.xi_lipschitz());
        if (cfg.start) require_dim(cfg.start->size(), space.dim(), "space.start");
        if (cfg.comparator_x) require_dim(cfg.comparator_x->size(), space.dim(), "comparator.x");
    } catch (const input_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig parse_config(const std::string& text) {
    detail::KeyValues kv(text);
    ExperimentConfig c;
    c.name = kv.text("name", c.name);

    const auto K = kv.count("loss.pieces", 0);
    c.allow_unbounded = kv.flag("loss.allow_unbounded", false);
    for (std::uint64_t k = 0; k < K; ++k) {
        const std::string p = "loss.piece." + std::to_string(k) + ".";
        PieceSpec s;
        s.x_kind = kv.text(p + "x.kind", "affine");
        s.x_slope = kv.required_vector(p + "x.slope");
        s.x_offset = kv.number(p + "x.offset", 0);
        s.x_scale = kv.number(p + "x.scale", 1);
        s.xi_kind = kv.text(p + "xi.kind", "cone");
        s.xi_height = kv.number(p + "xi.height", 0);
        if (s.xi_kind == "linear") {
            s.xi_slope = kv.required_vector(p + "xi.slope");
        } else {
            s.xi_gamma = kv.number(p + "xi.gamma", 1);
            s.xi_center = kv.required_vector(p + "xi.center");
        }
        c.pieces.push_back(std::move(s));
    }

    c.space_kind = kv.text("space.kind", "box");
    if (c.space_kind == "box") {
        c.space_lower = kv.required_vector("space.lower");
        c.space_upper = kv.required_vector("space.upper");
    } else if (c.space_kind == "ball") {
        c.space_center = kv.required_vector("space.center");
        c.space_radius = kv.number("space.radius", 1);
    } else {
        throw config_error("config: space.kind must be box or ball");
    }
    c.start = kv.vector("space.start");

    c.radius = kv.number("ambiguity.radius", 0);
    c.horizon = kv.count("run.horizon", 1);

    c.delta = kv.number("tolerance.delta", c.delta);
    c.eps_alpha = kv.number("tolerance.eps_alpha", c.eps_alpha);
    c.eta_out_cap = kv.number("tolerance.eta_out_cap", c.eta_out_cap);
    c.eta_in = kv.optional_number("tolerance.eta_in");
    c.eta_b = kv.optional_number("tolerance.eta_b");
    c.eta_lambda = kv.optional_number("tolerance.eta_lambda");
    c.inner = kv.text("tolerance.inner", c.inner);
    c.max_iterations = kv.count("tolerance.max_iterations", c.max_iterations);

    c.stream.family = kv.text("stream.family", c.stream.family);
    c.stream.dim = kv.count("stream.dim", 1);
    c.stream.seed = kv.count("stream.seed", 1);
    if (c.stream.family == "gaussian") {
        c.stream.mean = kv.vector("stream.mean").value_or(Vector::Zero(Eigen::Index(c.stream.dim)));
        c.stream.stddev = kv.vector("stream.stddev").value_or(Vector::Ones(Eigen::Index(c.stream.dim)));
    } else if (c.stream.family == "uniform") {
        c.stream.lower = kv.vector("stream.lower").value_or(Vector::Zero(Eigen::Index(c.stream.dim)));
        c.stream.upper = kv.vector("stream.upper").value_or(Vector::Ones(Eigen::Index(c.stream.dim)));
    } else if (c.stream.family == "mixture") {
        const auto n = kv.count("stream.components", 0);
        if (n == 0) throw config_error("config: mixture stream needs stream.components >= 1");
        for (std::uint64_t j = 0; j < n; ++j) {
            const std::string p = "stream.component." + std::to_string(j) + ".";
            MixtureComponent mc;
            mc.weight = kv.number(p + "weight", 1);
            mc.mean = kv.required_vector(p + "mean");
            mc.stddev = kv.vector(p + "stddev").value_or(Vector::Ones(mc.mean.size()));
            c.stream.components.push_back(std::move(mc));
        }
    } else {
        throw config_error("config: unknown stream.family '" + c.stream.family + "'");
    }

    c.comparator_kind = kv.text("comparator.kind", c.comparator_kind);
    c.comparator_x = kv.vector("comparator.x");
    c.comparator_grid = kv.count("comparator.grid", c.comparator_grid);
    c.holdout_size = kv.count("holdout.size", c.holdout_size);
    c.holdout_seed = kv.count("holdout.seed", c.holdout_seed);
    c.gap_enabled = kv.flag("gap.enabled", c.gap_enabled);
    c.gap_grid = kv.count("gap.grid", c.gap_grid);

    c.validate = kv.flag("validate", c.validate);
    c.validate_rounds = kv.count("validate.rounds", c.validate_rounds);
    c.validate_instances = kv.count("validate.instances", c.validate_instances);

    c.trace_path = kv.text("output.trace", c.trace_path);
    c.summary_path = kv.text("output.summary", c.summary_path);
    c.report_path = kv.text("output.report", c.report_path);
    c.timing = kv.flag("output.timing", c.timing);

    kv.reject_unused();
    validate_config(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical text form; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
    using detail::fmt;
    std::ostringstream o;
    auto line = [&](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
    line("name", c.name);
    line("loss.pieces", std::to_string(c.pieces.size()));
    line("loss.allow_unbounded", c.allow_unbounded ? "true" : "false");
    for (std::size_t k = 0; k < c.pieces.size(); ++k) {
        const auto& s = c.pieces[k];
        const std::string p = "loss.piece." + std::to_string(k) + ".";
        line(p + "x.kind", s.x_kind);
        line(p + "x.slope", fmt(s.x_slope));
        line(p + "x.offset", fmt(s.x_offset));
        line(p + "x.scale", fmt(s.x_scale));
        line(p + "xi.kind", s.xi_kind);
        line(p + "xi.height", fmt(s.xi_height));
        if (s.xi_kind == "linear") {
            line(p + "xi.slope", fmt(s.xi_slope));
        } else {
            line(p + "xi.gamma", fmt(s.xi_gamma));
            line(p + "xi.center", fmt(s.xi_center));
        }
    }
    line("space.kind", c.space_kind);
    if (c.space_kind == "box") {
        line("space.lower", fmt(c.space_lower));
        line("space.upper", fmt(c.space_upper));
    } else {
        line("space.center", fmt(c.space_center));
        line("space.radius", fmt(c.space_radius));
    }
    if (c.start) line("space.start", fmt(*c.start));
    line("ambiguity.radius", fmt(c.radius));
    line("run.horizon", std::to_string(c.horizon));
    line("tolerance.delta", fmt(c.delta));
    line("tolerance.eps_alpha", fmt(c.eps_alpha));
    line("tolerance.eta_out_cap", fmt(c.eta_out_cap));
    if (c.eta_in) line("tolerance.eta_in", fmt(*c.eta_in));
    if (c.eta_b) line("tolerance.eta_b", fmt(*c.eta_b));
    if (c.eta_lambda) line("tolerance.eta_lambda", fmt(*c.eta_lambda));
    line("tolerance.inner", c.inner);
    line("tolerance.max_iterations", std::to_string(c.max_iterations));
    line("stream.family", c.stream.family);
    line("stream.dim", std::to_string(c.stream.dim));
    line("stream.seed", std::to_string(c.stream.seed));
    if (c.stream.family == "gaussian") {
        line("stream.mean", fmt(c.stream.mean));
        line("stream.stddev", fmt(c.stream.stddev));
    } else if (c.stream.family == "uniform") {
        line("stream.lower", fmt(c.stream.lower));
        line("stream.upper", fmt(c.stream.upper));
    } else {
        line("stream.components", std::to_string(c.stream.components.size()));
        for (std::size_t j = 0; j < c.stream.components.size(); ++j) {
            const std::string p = "stream.component." + std::to_string(j) + ".";
            line(p + "weight", fmt(c.stream.components[j].weight));
            line(p + "mean", fmt(c.stream.components[j].mean));
            line(p + "stddev", fmt(c.stream.components[j].stddev));
        }
    }
    line("comparator.kind", c.comparator_kind);
    if (c.comparator_x) line("comparator.x", fmt(*c.comparator_x));
    line("comparator.grid", std::to_string(c.comparator_grid));
    line("holdout.size", std::to_string(c.holdout_size));
    line("holdout.seed", std::to_string(c.holdout_seed));
    line("gap.enabled", c.gap_enabled ? "true" : "false");
    line("gap.grid", std::to_string(c.gap_grid));
    line("validate", c.validate ? "true" : "false");
    line("validate.rounds", std::to_string(c.validate_rounds));
    line("validate.instances", std::to_string(c.validate_instances));
    line("output.trace", c.trace_path);
    line("output.summary", c.summary_path);
    line("output.report", c.report_path);
    line("output.timing", c.timing ? "true" : "false");
    return o.str();
}

inline LossModel build_loss(const ExperimentConfig& cfg) {
    std::vector<Piece> pieces;
    for (const auto& s : cfg.pieces) {
        XTerm x;
        if (s.x_kind == "affine")
            x = AffineTerm{s.x_slope, s.x_offset};
        else if (s.x_kind == "absdev")
            x = AbsDeviationTerm{s.x_slope, s.x_offset, s.x_scale};
        else
            throw config_error("config: unknown x-term kind '" + s.x_kind + "'");
        XiTerm xi;
        if (s.xi_kind == "cone")
            xi = ConeTerm{s.xi_height, s.xi_gamma, s.xi_center};
        else if (s.xi_kind == "smooth")
            xi = SmoothConeTerm{s.xi_height, s.xi_gamma, s.xi_center};
        else if (s.xi_kind == "linear")
            xi = LinearTerm{s.xi_height, s.xi_slope};
        else
            throw config_error("config: unknown xi-term kind '" + s.xi_kind + "'");
        pieces.emplace_back(std::move(x), std::move(xi));
    }
    return cfg.allow_unbounded ? LossModel::unchecked(std::move(pieces)) : make_separable_loss(std::move(pieces));
}

inline DecisionSpace build_space(const ExperimentConfig& cfg) {
    if (cfg.space_kind == "box") return DecisionSpace::box(cfg.space_lower, cfg.space_upper);
    if (cfg.space_kind == "ball") return DecisionSpace::ball(cfg.space_center, cfg.space_radius);
    throw config_error("config: space.kind must be box or ball");
}

inline ToleranceConfig build_tolerance(const ExperimentConfig& cfg) {
    ToleranceConfig t;
    t.delta = cfg.delta;
    t.eps_alpha = cfg.eps_alpha;
    t.eta_out_cap = cfg.eta_out_cap;
    t.eta_in_override = cfg.eta_in;
    t.eta_b_override = cfg.eta_b;
    t.eta_lambda_override = cfg.eta_lambda;
    t.inner = cfg.inner == "iterative" ? InnerMethod::iterative : InnerMethod::exact;
    t.iterative.max_iterations = cfg.max_iterations;
    return t;
}

inline LearnerConfig build_learner(const ExperimentConfig& cfg) {
    return LearnerConfig{build_loss(cfg), build_space(cfg), AmbiguitySpec(cfg.radius), build_tolerance(cfg), cfg.start};
}

} // namespace wdro::bench
