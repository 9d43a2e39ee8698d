#pragma once

// Atom files and run traces.
//
// Atom file: one atom per line, whitespace-separated coordinates, optionally
// followed by a weight column. Without weights the atoms are uniform. When
// the atom dimension m is known, lines with m + 1 numbers carry a weight;
// otherwise the caller says whether the last column is a weight. Blank lines
// and `#` comments are ignored.
//
// Trace: tab-separated, one header line, then one row per round with
//   t  loss  comparator  oracle  budget  lambda  step  eta_lambda
//   lambda_lip_guess  eta_out  x_1 .. x_n  [wall_ms]
// Numbers are printed with 17 significant digits so equal runs give equal
// bytes; wall time is only written when requested.

#include "wdro/bench/config.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

namespace wdro::bench {

inline DiscreteDistribution parse_atoms(std::istream& in, const std::string& name,
                                        std::optional<Eigen::Index> dim = std::nullopt, bool weighted = false) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& m) {
        throw input_error(name + " line " + std::to_string(lineno) + ": " + m);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream cs(line);
        std::vector<double> xs;
        std::string tok;
        while (cs >> tok) {
            try {
                std::size_t pos = 0;
                xs.push_back(std::stod(tok, &pos));
                if (pos != tok.size()) fail("expected numbers, got '" + tok + "'");
            } catch (const std::logic_error&) {
                fail("expected numbers, got '" + tok + "'");
            }
        }
        if (xs.empty()) continue;
        if (!rows.empty() && xs.size() != rows.front().size()) fail("column count differs from the first atom");
        rows.push_back(std::move(xs));
    }
    if (rows.empty()) throw input_error(name + ": no atoms");
    const auto cols = static_cast<Eigen::Index>(rows.front().size());
    if (dim) {
        if (cols == *dim + 1)
            weighted = true;
        else if (cols == *dim)
            weighted = false;
        else
            throw input_error(name + ": expected " + std::to_string(*dim) + " coordinates per atom, got " +
                              std::to_string(cols));
    }
    const Eigen::Index m = weighted ? cols - 1 : cols;
    if (m < 1) throw input_error(name + ": atoms need at least one coordinate");

    DiscreteDistribution d;
    for (const auto& r : rows)
        d.add(Eigen::Map<const Vector>(r.data(), m), weighted ? r.back() : 1.0 / double(rows.size()));
    d.validate(1e-6);
    return d;
}

inline DiscreteDistribution read_atoms(const std::string& path, std::optional<Eigen::Index> dim = std::nullopt,
                                       bool weighted = false) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot read '" + path + "'");
    return parse_atoms(in, path, dim, weighted);
}

inline void write_atoms(std::ostream& out, const DiscreteDistribution& d) {
    for (std::size_t i = 0; i < d.size(); ++i) out << detail::fmt(d.atoms[i]) << ' ' << detail::fmt(d.weights[i]) << '\n';
}

inline void write_trace(std::ostream& out, const RunTrace& trace, bool timing) {
    const Eigen::Index n = trace.rounds.empty() ? 0 : trace.rounds.front().x.size();
    out << "t\tloss\tcomparator\toracle\tbudget\tlambda\tstep\teta_lambda\tlambda_lip_guess\teta_out";
    for (Eigen::Index j = 0; j < n; ++j) out << "\tx_" << j + 1;
    if (timing) out << "\twall_ms";
    out << '\n';
    using detail::fmt;
    for (const auto& r : trace.rounds) {
        out << r.t << '\t' << fmt(r.loss) << '\t' << fmt(r.comparator) << '\t' << fmt(r.oracle_value) << '\t'
            << fmt(r.budget_used) << '\t' << fmt(r.lambda) << '\t' << fmt(r.step) << '\t' << fmt(r.eta_lambda) << '\t'
            << fmt(r.lambda_lip_guess) << '\t' << fmt(r.eta_out);
        for (Eigen::Index j = 0; j < n; ++j) out << '\t' << fmt(r.x(j));
        if (timing) out << '\t' << fmt(r.wall_ms);
        out << '\n';
    }
}

} // namespace wdro::bench
