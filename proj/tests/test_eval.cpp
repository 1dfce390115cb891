#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lfd/eval.hpp"
#include "lfd/model.hpp"
#include "lfd/nptest.hpp"
#include "lfd/oracle.hpp"
#include "lfd/smd.hpp"
#include "lfd/stats.hpp"

using namespace lfd;

namespace {

std::string corpus(const std::string& name) { return std::string(LFD_CORPUS_DIR "/") + name; }

DiscreteProblem toy2_dp() { return load_discrete_csv(corpus("toy2.csv")); }

TestingProblem single_gaussian(double theta1, double alpha) {
    TestingProblem tp;
    tp.nulls.push_back(gaussian_member(0.0));
    tp.alternative = gaussian_member(theta1);
    tp.alpha = alpha;
    return tp;
}

}  // namespace

TEST_CASE("mc_size_power on constant tests is exact") {
    const TestingProblem p = single_gaussian(2.0, 0.1);
    const TestEvaluation one = mc_size_power([](double) { return 1.0; }, p, 5000, 1);
    CHECK(one.size_per_null[0] == 1.0);
    CHECK(one.power == 1.0);
    CHECK(one.std_errors[0] == 0.0);
    CHECK(one.std_errors[1] == 0.0);
    CHECK(one.draws_used == 5000);

    const TestEvaluation zero = mc_size_power([](double) { return 0.0; }, p, 5000, 1);
    CHECK(zero.size_per_null[0] == 0.0);
    CHECK(zero.power == 0.0);

    CHECK_THROWS_AS(mc_size_power([](double) { return 1.0; }, p, 0, 1), std::invalid_argument);
}

TEST_CASE("mc_size_power recovers the right-tail gaussian test") {
    const TestingProblem p = single_gaussian(2.0, 0.1);
    const double z90 = normal_quantile(0.9);
    const std::int64_t n = 20000;
    const TestEvaluation te =
        mc_size_power([z90](double y) { return y > z90 ? 1.0 : 0.0; }, p, n, 5);
    CHECK(std::abs(te.size_per_null[0] - 0.1) <
          4.0 * std::sqrt(0.1 * 0.9 / static_cast<double>(n)));
    // largest attainable power of any level-0.1 test in this pair
    const double v_bar = 0.7637595841058831;
    CHECK(std::abs(te.power - v_bar) <
          4.0 * std::sqrt(v_bar * (1.0 - v_bar) / static_cast<double>(n)));
    CHECK(te.std_errors[0] == binomial_std_error(te.size_per_null[0], static_cast<double>(n)));

    const TestEvaluation again =
        mc_size_power([z90](double y) { return y > z90 ? 1.0 : 0.0; }, p, n, 5);
    CHECK(again.size_per_null[0] == te.size_per_null[0]);
    CHECK(again.power == te.power);
}

TEST_CASE("exact_size_power sums the atom masses") {
    const DiscreteProblem dp = toy2_dp();
    const TestEvaluation reject_high =
        exact_size_power([](double y) { return y == 2.0 ? 1.0 : 0.0; }, dp);
    CHECK(reject_high.size_per_null[0] == 0.1);
    CHECK(reject_high.power == 0.5);
    CHECK(reject_high.std_errors[0] == 0.0);
    CHECK(reject_high.draws_used == 0);

    const TestEvaluation all = exact_size_power([](double) { return 1.0; }, dp);
    CHECK(all.size_per_null[0] == 1.0);
    CHECK(all.power == 1.0);

    const TestEvaluation half = exact_size_power([](double) { return 0.5; }, dp);
    CHECK(half.size_per_null[0] == 0.5);
    CHECK(half.power == 0.5);

    CHECK_THROWS_AS(exact_size_power([](double) { return 1.5; }, dp), std::invalid_argument);
    CHECK_THROWS_AS(exact_size_power([](double) { return -0.1; }, dp), std::invalid_argument);
}

TEST_CASE("evaluate dispatches on the backend") {
    const TestingProblem disc = to_testing_problem(toy2_dp(), 0.1);
    EvalBackend exact;
    exact.kind = EvalBackend::Kind::Exact;
    const TestEvaluation te =
        evaluate([](double y) { return y == 2.0 ? 1.0 : 0.0; }, disc, exact);
    CHECK(te.size_per_null[0] == 0.1);

    const TestingProblem cont = single_gaussian(2.0, 0.1);
    CHECK_THROWS_AS(evaluate([](double) { return 0.0; }, cont, exact), std::invalid_argument);

    EvalBackend mc;
    mc.kind = EvalBackend::Kind::MonteCarlo;
    mc.draws = 20000;
    mc.seed = 9;
    const TestEvaluation sampled =
        evaluate([](double y) { return y == 2.0 ? 1.0 : 0.0; }, disc, mc);
    CHECK(std::abs(sampled.size_per_null[0] - 0.1) < 4.0 * std::sqrt(0.09 / 20000.0));
    CHECK(std::abs(sampled.power - 0.5) < 4.0 * std::sqrt(0.25 / 20000.0));
}

TEST_CASE("dual_objective closed cases on the discrete pair") {
    const TestingProblem p = to_testing_problem(toy2_dp(), 0.1);
    EvalBackend exact;
    exact.kind = EvalBackend::Kind::Exact;

    // kappa = 0: the test rejects everything, f = power = 1.
    const DualDiagnostics at_zero = dual_objective(make_multipliers({0.0}, 0.1), p, exact);
    CHECK(at_zero.f_value == 1.0);
    CHECK(at_zero.f_std_error == 0.0);
    CHECK(at_zero.slackness[0] == 0.0);

    // kappa at the cap: rejects nothing, f = 0 - 10 * (0 - 0.1) = 1.
    const DualDiagnostics at_cap = dual_objective(make_multipliers({10.0}, 0.1), p, exact);
    CHECK(at_cap.f_value == 1.0);
    CHECK(at_cap.slackness[0] == doctest::Approx(-1.0).epsilon(1e-15));

    const DualDiagnostics mid =
        dual_objective(make_multipliers({1.0}, 0.1), p, exact, 0.5);
    CHECK(mid.f_value == doctest::Approx(0.5).epsilon(1e-15));  // inside the flat valley
    REQUIRE(mid.gap.has_value());
    CHECK(*mid.gap == mid.f_value - 0.5);

    CHECK_THROWS_AS(dual_objective(make_multipliers({1.0, 1.0}, 0.1), p, exact),
                    std::invalid_argument);
    CHECK_THROWS_AS(dual_objective(make_multipliers({1.0}, 0.2), p, exact),
                    std::invalid_argument);
}

TEST_CASE("dual_objective agrees with the closed-form dual everywhere") {
    for (const char* name : {"toy2.csv", "conc_m2.csv", "toy3.csv"}) {
        const DiscreteProblem dp = load_discrete_csv(corpus(name));
        const TestingProblem p = to_testing_problem(dp, 0.1);
        const std::size_t M = dp.null_masses.size();
        EvalBackend exact;
        exact.kind = EvalBackend::Kind::Exact;
        RngStream rng(13, 1);
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> kv(M);
            for (auto& v : kv) v = rng.uniform01() * 10.0 / static_cast<double>(M);
            const DualDiagnostics d = dual_objective(make_multipliers(kv, 0.1), p, exact);
            CHECK(d.f_value == doctest::Approx(exact_dual_value(dp, 0.1, kv)).epsilon(1e-12));
        }
    }
}

TEST_CASE("dual objective dominates the optimum and is convex") {
    const DiscreteProblem dp = toy2_dp();
    const TestingProblem p = to_testing_problem(dp, 0.1);
    EvalBackend exact;
    exact.kind = EvalBackend::Kind::Exact;
    const double v_bar = np_oracle_m1(dp, 0.1).v_bar;
    CHECK(v_bar == 0.5);

    RngStream rng(19, 1);
    for (int rep = 0; rep < 100; ++rep) {
        const double k1 = 10.0 * rng.uniform01();
        const double k2 = 10.0 * rng.uniform01();
        const double f1 = dual_objective(make_multipliers({k1}, 0.1), p, exact).f_value;
        const double f2 = dual_objective(make_multipliers({k2}, 0.1), p, exact).f_value;
        CHECK(f1 >= v_bar - 1e-12);  // weak duality

        const double beta = rng.uniform01();
        const double mid = beta * k1 + (1.0 - beta) * k2;
        const double fmid = dual_objective(make_multipliers({mid}, 0.1), p, exact).f_value;
        CHECK(fmid <= beta * f1 + (1.0 - beta) * f2 + 1e-10);  // convexity

        // Subgradient inequality through the exact sizes at k1.
        const Multipliers mk = make_multipliers({k1}, 0.1);
        const TestEvaluation te = exact_size_power(
            [&](double y) { return np_test(mk, y, p) ? 1.0 : 0.0; }, dp);
        const double sub = -(te.size_per_null[0] - 0.1);
        CHECK(f2 >= f1 + sub * (k2 - k1) - 1e-10);
    }
}

TEST_CASE("monte-carlo dual objective is consistent with the exact one") {
    const DiscreteProblem dp = toy2_dp();
    const TestingProblem p = to_testing_problem(dp, 0.1);
    EvalBackend exact;
    exact.kind = EvalBackend::Kind::Exact;
    EvalBackend mc;
    mc.draws = 20000;
    mc.seed = 3;

    const Multipliers k = make_multipliers({2.0}, 0.1);
    const DualDiagnostics de = dual_objective(k, p, exact);
    const DualDiagnostics dm = dual_objective(k, p, mc);
    CHECK(dm.f_std_error > 0.0);
    CHECK(std::abs(dm.f_value - de.f_value) < 4.0 * dm.f_std_error + 1e-12);
}

TEST_CASE("excess term arithmetic") {
    const std::vector<double> ips = {0.1, -0.3};
    CHECK(excess_type1_term(ips) == doctest::Approx(0.1).epsilon(1e-15));
    const std::vector<double> empty;
    CHECK_THROWS_AS(excess_type1_term(empty), std::invalid_argument);
}

TEST_CASE("epsilon_lfd_check compares against the inflated optimum") {
    const EpsilonLfdResult pass = epsilon_lfd_check(0.7797, 0.76378, 0.1);
    CHECK(pass.pass);
    CHECK(pass.margin == doctest::Approx(0.76378 + 0.1 - 0.7797).epsilon(1e-12));

    CHECK(epsilon_lfd_check(0.5, 0.5, 0.0).pass);  // boundary counts as holding
    CHECK(!epsilon_lfd_check(0.9, 0.76378, 0.1).pass);
    CHECK(epsilon_lfd_check(0.9, 0.76378, 0.1).margin < 0.0);
}

TEST_CASE("nearly_optimal_check applies both bounds") {
    TestEvaluation te;
    te.size_per_null = {0.105, 0.103};
    te.power = 0.70;
    te.std_errors = {0.0, 0.0, 0.0};
    const double v_bar = 0.76378;

    const NearOptimalityReport ok = nearly_optimal_check(te, v_bar, 0.1, 0.1, 0.1);
    CHECK(ok.size_ok);
    CHECK(ok.power_ok);
    CHECK(ok.pass);
    CHECK(ok.worst_null == 0);
    CHECK(ok.worst_size == 0.105);
    CHECK(ok.size_bound == doctest::Approx(0.11).epsilon(1e-15));
    CHECK(ok.power_bound == doctest::Approx(v_bar - 0.1).epsilon(1e-15));

    TestEvaluation oversize = te;
    oversize.size_per_null = {0.105, 0.12};
    const NearOptimalityReport r2 = nearly_optimal_check(oversize, v_bar, 0.1, 0.1, 0.1);
    CHECK(!r2.size_ok);
    CHECK(r2.worst_null == 1);
    CHECK(!r2.pass);

    TestEvaluation weak = te;
    weak.power = 0.60;
    const NearOptimalityReport r3 = nearly_optimal_check(weak, v_bar, 0.1, 0.1, 0.1);
    CHECK(!r3.power_ok);
    CHECK(!r3.pass);
}

TEST_CASE("complementary_slackness residuals") {
    const SlacknessReport zero =
        complementary_slackness(make_multipliers({0.0, 0.0}, 0.1),
                                std::vector<double>{0.5, 0.9}, 0.1, 0.01);
    CHECK(zero.residuals == std::vector<double>{0.0, 0.0});
    CHECK(zero.max_abs == 0.0);
    CHECK(zero.pass);

    const SlacknessReport tight = complementary_slackness(
        make_multipliers({10.0}, 0.1), std::vector<double>{0.1}, 0.1, 0.01);
    CHECK(tight.pass);
    CHECK(tight.max_abs == 0.0);

    const SlacknessReport broken = complementary_slackness(
        make_multipliers({10.0}, 0.1), std::vector<double>{0.12}, 0.1, 0.01);
    CHECK(!broken.pass);
    CHECK(broken.max_abs == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("averaged threshold test counts strictly-lower thresholds") {
    const AveragedThresholdTest avg(std::vector<double>{3.0, 1.0, 4.0, 2.0});
    CHECK(avg.epochs() == 4);
    CHECK(avg(0.5) == 0.0);
    CHECK(avg(1.0) == 0.0);  // tie accepts
    CHECK(avg(2.0) == 0.25);
    CHECK(avg(2.5) == 0.5);
    CHECK(avg(4.5) == 1.0);
    CHECK_THROWS_AS(AveragedThresholdTest(std::vector<double>{}), std::invalid_argument);

    // Matches the bit average of the per-epoch right-tail tests.
    const std::vector<double> th = {0.3, -1.2, 0.9, 2.4, 0.3};
    const AveragedThresholdTest a2(th);
    RngStream rng(2, 1);
    for (int i = 0; i < 200; ++i) {
        const double y = -3.0 + 6.0 * rng.uniform01();
        double frac = 0.0;
        for (const double c : th) frac += (y > c) ? 1.0 : 0.0;
        frac /= static_cast<double>(th.size());
        CHECK(a2(y) == frac);
    }
}
