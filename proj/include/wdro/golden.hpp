#pragma once

#include <cstddef>
#include <limits>

namespace wdro {

/// φ = (√5 − 1)/2
inline constexpr double golden_ratio = 0.6180339887498948482;

/// Which side of the bracket survives when the two probes compare equal.
enum class GoldenTies {
    keep_left,  ///< equal values shrink the upper end (budget subproblem rule)
    keep_right, ///< equal values raise the lower end (nested pair search rule)
};

struct GoldenResult {
    double low = 0;
    double high = 0;
    double best_point = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
};

/// Golden-section maximization of a unimodal f on [low, high] until the
/// bracket is no longer than `floor`. Each iteration evaluates one new probe;
/// the surviving probe's value is reused. Both initial probes are always
/// evaluated, so degenerate brackets still return a value.
template <class F>
GoldenResult golden_section_max(F&& f, double low, double high, double floor,
                                GoldenTies ties = GoldenTies::keep_right) {
    GoldenResult r;
    r.low = low;
    r.high = high;
    auto probe = [&](double z) {
        const double v = f(z);
        ++r.evaluations;
        if (v > r.best_value) {
            r.best_value = v;
            r.best_point = z;
        }
        return v;
    };

    double a = high - golden_ratio * (high - low);
    double b = low + golden_ratio * (high - low);
    double fa = probe(a);
    double fb = probe(b);
    while (r.high - r.low > floor) {
        const bool shrink_high = ties == GoldenTies::keep_right ? fa > fb : !(fa < fb);
        if (shrink_high) {
            r.high = b;
            b = a;
            fb = fa;
            a = r.high - golden_ratio * (r.high - r.low);
            fa = probe(a);
        } else {
            r.low = a;
            a = b;
            fa = fb;
            b = r.low + golden_ratio * (r.high - r.low);
            fb = probe(b);
        }
    }
    return r;
}

} // namespace wdro
