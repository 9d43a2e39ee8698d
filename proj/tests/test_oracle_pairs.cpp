#include "support.hpp"

#include <gtest/gtest.h>

using namespace wdro;
using namespace wdro::test;

namespace {

// Independent 1-D oracle for S^{(k1,k2)}(b). The inner maximum over the move
// is a concave 1-D problem solved by ternary search; the outer problem in
// (α₁, β₁) is jointly concave, so a grid that repeatedly zooms around its best
// cell converges to the maximum.
double inner_1d(const Piece& p, double u, double xi, double alpha, double beta) {
    if (alpha <= 0) return 0;
    const double r = beta / alpha;
    double lo = -r, hi = r;
    auto h = [&](double v) { return p.xi_value(scalar(xi - v)); };
    for (int i = 0; i < 200; ++i) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (h(m1) < h(m2))
            lo = m1;
        else
            hi = m2;
    }
    return alpha * (u + std::max({h(lo), h(-r), h(r)}));
}

double pair_oracle(const LossModel& l, const Vector& x, double xi, std::size_t k1, std::size_t k2, double b) {
    const double u1 = l.piece(k1).x_value(x), u2 = l.piece(k2).x_value(x);
    auto f = [&](double a, double be) {
        return inner_1d(l.piece(k1), u1, xi, a, be) + inner_1d(l.piece(k2), u2, xi, 1 - a, b - be);
    };
    double a_lo = 0, a_hi = 1, b_lo = 0, b_hi = b;
    double best = -std::numeric_limits<double>::infinity();
    const int n = 40;
    for (int stage = 0; stage < 6; ++stage) {
        double ba = 0, bb = 0;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                const double a = a_lo + (a_hi - a_lo) * i / n, be = b_lo + (b_hi - b_lo) * j / n;
                const double v = f(a, be);
                if (v > best) {
                    best = v;
                    ba = a;
                    bb = be;
                }
            }
        const double wa = 2 * (a_hi - a_lo) / n, wb = 2 * (b_hi - b_lo) / n;
        a_lo = std::max(0.0, ba - wa);
        a_hi = std::min(1.0, ba + wa);
        b_lo = std::max(0.0, bb - wb);
        b_hi = std::min(b, bb + wb);
    }
    return best;
}

double utility_oracle(const LossModel& l, const Vector& x, double xi, double b) {
    if (l.size() == 1) return inner_1d(l.piece(0), l.piece(0).x_value(x), xi, 1, b);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k1 = 0; k1 + 1 < l.size(); ++k1)
        for (std::size_t k2 = k1 + 1; k2 < l.size(); ++k2) best = std::max(best, pair_oracle(l, x, xi, k1, k2, b));
    return best;
}

double S(const LossModel& l, const Vector& x, const Vector& xi, double b, const ToleranceConfig& tol) {
    const LossAtX at(l, x);
    return eval_S(at, xi, b, tol).value;
}

const ToleranceConfig tol3 = ToleranceConfig::with_delta(1e-3);

} // namespace

TEST(EvalPair, GlobalMaxReachable) {
    const LossModel l = twin_cones();
    const LossAtX at(l, scalar(0));
    const PairSolution s = eval_pair(at, scalar(0), 0, 1, 1.0, tol3);
    EXPECT_NEAR(s.value, 0, 2 * tol3.delta_eval());
    EXPECT_DOUBLE_EQ(s.alpha[0], 1);
    EXPECT_NEAR((scalar(0) - s.q[0] / s.alpha[0])(0), 1, 1e-9);
}

TEST(EvalPair, ZeroBudget) {
    const LossModel l = twin_cones();
    const LossAtX at(l, scalar(0));
    EXPECT_DOUBLE_EQ(eval_pair(at, scalar(0), 0, 1, 0.0, tol3).value, -1);
}

TEST(EvalPair, HalfBudget) {
    const LossModel l = twin_cones();
    const double oracle = pair_oracle(l, scalar(0), 0, 0, 1, 0.5);
    EXPECT_NEAR(oracle, -0.5, 1e-9);
    const LossAtX at(l, scalar(0));
    EXPECT_NEAR(eval_pair(at, scalar(0), 0, 1, 0.5, tol3).value, oracle, 4 * tol3.delta_eval());
}

TEST(EvalPair, Errors) {
    const LossModel l = twin_cones();
    const LossAtX at(l, scalar(0));
    EXPECT_THROW(eval_pair(at, scalar(0), 1, 0, 1.0, tol3), input_error);
    EXPECT_THROW(eval_pair(at, scalar(0), 0, 0, 1.0, tol3), input_error);
    EXPECT_THROW(eval_pair(at, scalar(0), 0, 2, 1.0, tol3), input_error);
    EXPECT_THROW(eval_pair(at, scalar(0), 0, 1, -0.1, tol3), input_error);
    EXPECT_THROW(eval_S(at, scalar(0), -1.0, tol3), input_error);
}

TEST(EvalPair, RecordsOuterFloor) {
    // Unequal heights so no endpoint saturates and the interior search runs.
    const LossModel l = make_separable_loss({cone_xi(0, 1, scalar(1)), cone_xi(0.5, 2, scalar(-3))});
    const LossAtX at(l, scalar(0));
    const PairSolution s = eval_pair(at, scalar(0.2), 0, 1, 0.3, tol3);
    EXPECT_DOUBLE_EQ(s.eta_out, tol3.eta_out(2, 0.2, 0.3));
}

TEST(EvalS, ThreePieces) {
    const LossModel l = make_separable_loss({cone_xi(0, 1, scalar(1)), cone_xi(0, 1, scalar(-1)), cone_xi(0, 2, scalar(0))});
    const double oracle = utility_oracle(l, scalar(0), 0, 1);
    EXPECT_NEAR(oracle, 0, 1e-9);
    EXPECT_NEAR(S(l, scalar(0), scalar(0), 1, tol3), oracle, 4 * tol3.delta_eval());
}

TEST(EvalS, ZeroBudgetIsLossAtCenter) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const LossModel l = random_loss(rng, rng.index(1, 4), 1, 2);
        const Vector x = rng.vector(1, -1, 1), xi = rng.vector(2, -2, 2);
        const LossAtX at(l, x);
        EXPECT_DOUBLE_EQ(eval_S(at, xi, 0, tol3).value, loss_eval(l, x, xi).value);
    }
}

TEST(EvalS, TwoPiecesEqualsPair) {
    const LossModel l = make_separable_loss({cone_xi(0, 1, scalar(1)), cone_xi(0.5, 2, scalar(-3))});
    const LossAtX at(l, scalar(0));
    for (double b : {0.1, 0.7, 3.0})
        EXPECT_DOUBLE_EQ(eval_S(at, scalar(0.2), b, tol3).value, eval_pair(at, scalar(0.2), 0, 1, b, tol3).value);
}

TEST(EvalS, SinglePiece) {
    const LossModel l = make_separable_loss({cone_xi(0, 1, scalar(2))});
    const LossAtX at(l, scalar(0));
    const UtilityValue u = eval_S(at, scalar(0), 0.5, tol3);
    EXPECT_NEAR(u.value, -1.5, 1e-12);
    EXPECT_EQ(u.best.k1, 0u);
    EXPECT_EQ(u.best.k2, 0u);
}

TEST(EvalS, TieGoesToFirstPair) {
    // Pieces 1 and 2 are copies and the budget reaches their apex: every pair scores 0.
    const LossModel l = make_separable_loss({cone_xi(0, 1, scalar(1)), cone_xi(0, 1, scalar(-1)), cone_xi(0, 1, scalar(-1))});
    const LossAtX at(l, scalar(0));
    const UtilityValue u = eval_S(at, scalar(-0.5), 1.0, tol3);
    EXPECT_DOUBLE_EQ(u.value, 0);
    EXPECT_EQ(u.best.k1, 0u);
    EXPECT_EQ(u.best.k2, 1u);
}

TEST(ToleranceConfig, DerivedFloors) {
    ToleranceConfig t = ToleranceConfig::with_delta(1e-2);
    EXPECT_DOUBLE_EQ(t.delta_eval(), 5e-3);
    EXPECT_DOUBLE_EQ(t.eta_in(2), 2.5e-3);
    EXPECT_DOUBLE_EQ(t.eta_b(2), 2.5e-3);
    EXPECT_DOUBLE_EQ(t.eta_out(1, 0, 0), 1e-4);
    EXPECT_DOUBLE_EQ(t.eta_out(100, 1, 1), 2 * 5e-3 / 300);
    EXPECT_DOUBLE_EQ(ToleranceConfig::lambda_lip_guess(2, 10, 0.5), 40);
    EXPECT_DOUBLE_EQ(t.eta_lambda(2, 10, 0.5), 2.5e-3 / 40);
}

TEST(ToleranceConfig, RejectsBrokenCouplings) {
    ToleranceConfig t;
    t.eta_in_override = 1.0;
    EXPECT_THROW(t.validate(1), input_error);
    t = {};
    t.eta_b_override = 0;
    EXPECT_THROW(t.validate(1), input_error);
    t = {};
    t.delta = 0;
    EXPECT_THROW(t.validate(1), input_error);
    t = {};
    t.eps_alpha = 0.6;
    EXPECT_THROW(t.validate(1), input_error);
    t = {};
    t.eta_in_override = 4e-4;
    EXPECT_NO_THROW(t.validate(1));
}

// ---- properties ----

TEST(OraclePairsProperty, SolutionInvariants) {
    Rng rng(32);
    for (int trial = 0; trial < 60; ++trial) {
        const LossModel l = random_loss(rng, rng.index(2, 3), 1, 2);
        const Vector x = rng.vector(1, -1, 1), xi = rng.vector(2, -2, 2);
        const double b = rng.uniform(0, 2);
        const LossAtX at(l, x);
        const PairSolution s = eval_S(at, xi, b, tol3).best;
        EXPECT_NEAR(s.alpha[0] + s.alpha[1], 1, 1e-10);
        EXPECT_NEAR(s.beta[0] + s.beta[1], b, 1e-10);
        for (int j = 0; j < 2; ++j) {
            EXPECT_GE(s.alpha[j], 0);
            EXPECT_LE(s.q[j].norm(), s.beta[j] + 1e-10);
        }
        double v = 0;
        for (int j = 0; j < 2; ++j)
            if (s.alpha[j] > 0) {
                const std::size_t k = j == 0 ? s.k1 : s.k2;
                v += s.alpha[j] * (l.piece(k).x_value(x) + l.piece(k).xi_value(xi - s.q[j] / s.alpha[j]));
            }
        EXPECT_NEAR(v, eval_S(at, xi, b, tol3).value, 1e-9);
    }
}

TEST(OraclePairsProperty, MonotoneConcaveLipschitz) {
    Rng rng(33);
    const double de = tol3.delta_eval();
    for (int trial = 0; trial < 60; ++trial) {
        const LossModel l = random_loss(rng, rng.index(2, 3), 1, static_cast<Eigen::Index>(rng.index(1, 2)));
        const Vector x = rng.vector(1, -1, 1), xi = rng.vector(l.xi_dim(), -2, 2);
        double b1 = rng.uniform(0, 2), b2 = rng.uniform(0, 2);
        if (b1 > b2) std::swap(b1, b2);
        const double s1 = S(l, x, xi, b1, tol3), s2 = S(l, x, xi, b2, tol3);
        const double sm = S(l, x, xi, (b1 + b2) / 2, tol3);
        EXPECT_GE(s2, s1 - 8 * de);
        EXPECT_GE(sm, (s1 + s2) / 2 - 12 * de);
        EXPECT_LE(std::abs(s2 - s1), l.xi_lipschitz() * (b2 - b1) + 8 * de);
    }
}

TEST(OraclePairsProperty, AgreesWithIndependentOracle) {
    Rng rng(34);
    const double de = tol3.delta_eval();
    for (int trial = 0; trial < 40; ++trial) {
        const LossModel l = random_loss(rng, rng.index(1, 3), 1, 1);
        const Vector x = rng.vector(1, -1, 1);
        const double xi = rng.uniform(-2, 2), b = rng.uniform(0, 2);
        const double oracle = utility_oracle(l, x, xi, b);
        const double got = S(l, x, scalar(xi), b, tol3);
        EXPECT_NEAR(got, oracle, 4 * de + 1e-6) << "trial " << trial;
    }
}

TEST(OraclePairsProperty, IterativeAgreesWithExact) {
    Rng rng(35);
    ToleranceConfig exact = ToleranceConfig::with_delta(0.05);
    ToleranceConfig iter = exact;
    iter.inner = InnerMethod::iterative;
    for (int trial = 0; trial < 8; ++trial) {
        const LossModel l = random_loss(rng, 2, 1, 1);
        const Vector x = rng.vector(1, -1, 1), xi = rng.vector(1, -2, 2);
        const double b = rng.uniform(0, 1);
        EXPECT_NEAR(S(l, x, xi, b, iter), S(l, x, xi, b, exact), 4 * exact.delta_eval()) << "trial " << trial;
    }
}
