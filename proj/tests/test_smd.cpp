#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lfd/eval.hpp"
#include "lfd/model.hpp"
#include "lfd/nptest.hpp"
#include "lfd/rng.hpp"
#include "lfd/smd.hpp"

using namespace lfd;

namespace {

std::string corpus(const std::string& name) { return std::string(LFD_CORPUS_DIR "/") + name; }

TestingProblem toy2(double alpha = 0.1) {
    return to_testing_problem(load_discrete_csv(corpus("toy2.csv")), alpha);
}

// K = 3 problem whose alternative mixes two simple members half and half.
DiscreteProblem mix_dp() {
    DiscreteProblem dp;
    dp.atoms = {1.0, 2.0, 3.0};
    dp.null_masses = {{0.5, 0.3, 0.2}};
    dp.alt_masses = {0.15, 0.4, 0.45};
    return dp;
}

DensityMember atom_member(std::vector<double> atoms, std::vector<double> masses) {
    DensityMember d;
    auto log_masses = masses;
    for (auto& v : log_masses) v = std::log(v);
    d.log_pdf = [atoms, log_masses](double y) {
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (y == atoms[k]) return log_masses[k];
        }
        return -std::numeric_limits<double>::infinity();
    };
    d.sampler = [atoms, masses](RngStream& s) {
        const double u = s.uniform01();
        double acc = 0.0;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            acc += masses[k];
            if (u < acc) return atoms[k];
        }
        return atoms.back();
    };
    return d;
}

}  // namespace

TEST_CASE("schedule matches the closed form") {
    const Schedule s1 = schedule(0.1, 0.1, 200);
    CHECK(s1.T == 171666);
    CHECK(std::abs(s1.eta - 0.00617283950617284) < 1e-15);
    CHECK(!s1.guarantee_out_of_range);  // alpha < 1/2 and M > e/alpha

    CHECK(schedule(0.05, 0.2, 100).T == 166247);
    const Schedule s3 = schedule(0.1, 0.05, 2);
    CHECK(s3.T == 89832);
    CHECK(std::abs(s3.eta - 0.00308641975308642) < 1e-15);
    const Schedule s4 = schedule(0.1, 0.3, 2);
    CHECK(s4.T == 2496);
    CHECK(std::abs(s4.eta - 0.018518518518518517) < 1e-15);

    CHECK(schedule(0.1, 0.1, 10).guarantee_out_of_range);   // M < e/alpha
    CHECK(schedule(0.5, 0.1, 100).guarantee_out_of_range);  // alpha not below 1/2
    CHECK(schedule(0.6, 0.1, 100).guarantee_out_of_range);

    CHECK_THROWS_AS(schedule(0.0, 0.1, 10), std::invalid_argument);
    CHECK_THROWS_AS(schedule(1.0, 0.1, 10), std::invalid_argument);
    CHECK_THROWS_AS(schedule(0.1, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(schedule(0.1, 0.1, 1), std::invalid_argument);
}

TEST_CASE("init_multipliers is the uniform start") {
    const Multipliers a = init_multipliers(0.1, 200);  // M >= e/alpha: 1/(alpha M)
    REQUIRE(a.values.size() == 200);
    for (const double v : a.values) CHECK(v == 0.05);

    const Multipliers b = init_multipliers(0.1, 10);  // M < e/alpha: 1/e
    for (const double v : b.values) CHECK(v == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    const Multipliers c = init_multipliers(0.5, 6);
    for (const double v : c.values) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const Multipliers d = init_multipliers(0.1, 1);
    CHECK(d.values[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    CHECK_THROWS_AS(init_multipliers(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(init_multipliers(0.1, 0), std::invalid_argument);
}

TEST_CASE("estimate_subgradient hits exact values at extreme multipliers") {
    const TestingProblem p = toy2();
    // kappa = 0: the test rejects every atom, so each coordinate is -(1 - alpha).
    const auto g0 = estimate_subgradient(make_multipliers({0.0}, 0.1), p, 50, 3);
    CHECK(g0[0] == -0.9);
    // kappa at the cap: never rejects, each coordinate is alpha.
    const auto gc = estimate_subgradient(make_multipliers({10.0}, 0.1), p, 50, 3);
    CHECK(gc[0] == 0.1);
}

TEST_CASE("estimate_subgradient stays in its range and is unbiased") {
    const TestingProblem p = toy2();
    const Multipliers k3 = make_multipliers({3.0}, 0.1);
    double mean = 0.0;
    const std::int64_t reps = 20000;
    for (std::int64_t e = 0; e < reps; ++e) {
        const auto g = estimate_subgradient(k3, p, 1, 17, static_cast<std::uint64_t>(e));
        REQUIRE(g[0] >= -0.9);
        REQUIRE(g[0] <= 0.1);
        mean += g[0];
    }
    mean /= static_cast<double>(reps);
    // exact size at kappa = 3 is 0.1, so the true coordinate is 0
    CHECK(std::abs(mean) < 4.0 * std::sqrt(0.09 / static_cast<double>(reps)));
}

TEST_CASE("estimate_subgradient is a pure function of its cells") {
    const TestingProblem disc = toy2();
    const TestingProblem cont = gaussian_location_problem(4, -2.0, 0.0, 2.0, 0.1);

    // Multipliers chosen so the test is nondegenerate on each problem.
    const std::vector<std::pair<const TestingProblem*, double>> cases = {{&disc, 3.0},
                                                                         {&cont, 0.3}};
    for (const auto& [p, kval] : cases) {
        const std::size_t M = p->M();
        std::vector<double> kv(M, kval);
        const Multipliers kappa = make_multipliers(kv, 0.1);
        const std::int64_t N = 200;
        const std::uint64_t seed = 5, epoch = 9;

        const auto fast = estimate_subgradient(kappa, *p, N, seed, epoch);
        const auto again = estimate_subgradient(kappa, *p, N, seed, epoch);
        CHECK(fast == again);

        // Reference: draw each cell's sample through the member sampler and
        // evaluate the test directly. Must agree bit for bit.
        for (std::size_t m = 0; m < M; ++m) {
            double hits = 0.0;
            for (std::int64_t n = 0; n < N; ++n) {
                RngStream cell(seed, streams::kGradient, epoch, static_cast<std::uint64_t>(m),
                               static_cast<std::uint64_t>(n));
                const double y = p->nulls[m].sampler(cell);
                hits += np_test(kappa, y, *p) ? 1.0 : 0.0;
            }
            const double expect = -(hits / static_cast<double>(N) - 0.1);
            CHECK(fast[m] == expect);
        }

        const auto other = estimate_subgradient(kappa, *p, N, seed, epoch + 1);
        CHECK(fast != other);  // fresh cells per epoch
    }

    CHECK_THROWS_AS(estimate_subgradient(make_multipliers({1.0}, 0.1), cont, 10, 1),
                    std::invalid_argument);  // dimension mismatch
    CHECK_THROWS_AS(estimate_subgradient(make_multipliers({1.0}, 0.1), disc, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("entropic_update worked examples") {
    // Zero subgradient and no binding cap: the iterate does not move.
    const Multipliers fix = entropic_update(make_multipliers({1.0, 1.0}, 0.5),
                                            std::vector<double>{0.0, 0.0}, 0.7);
    CHECK(fix.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fix.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Uniform growth is exactly cancelled by the cap rescale.
    const double ln2 = std::log(2.0);
    const Multipliers capped = entropic_update(make_multipliers({1.0, 1.0}, 0.5),
                                               std::vector<double>{-ln2, -ln2}, 1.0);
    CHECK(capped.values[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(capped.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Off the cap the step is plain multiplicative.
    const Multipliers moved = entropic_update(make_multipliers({0.05, 0.05}, 0.1),
                                              std::vector<double>{-0.9, 0.1},
                                              0.00617283950617284);
    CHECK(moved.values[0] == doctest::Approx(0.05027855081360088).epsilon(1e-12));
    CHECK(moved.values[1] == doctest::Approx(0.04996914532649625).epsilon(1e-12));

    CHECK_THROWS_AS(entropic_update(make_multipliers({1.0}, 0.1),
                                    std::vector<double>{0.1, 0.2}, 0.5),
                    std::invalid_argument);
}

TEST_CASE("entropic_update preserves zeros and the feasible domain") {
    const Multipliers z = entropic_update(make_multipliers({0.0, 0.3}, 0.1),
                                          std::vector<double>{-0.5, 0.2}, 0.3);
    CHECK(z.values[0] == 0.0);
    CHECK(z.values[1] == doctest::Approx(0.3 * std::exp(-0.06)).epsilon(1e-12));

    RngStream rng(21, 1);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t M = 1 + static_cast<std::size_t>(rng.uniform_below(4));
        std::vector<double> kv(M), g(M);
        double norm = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            kv[m] = 10.0 * rng.uniform01() / static_cast<double>(M);
            g[m] = -0.9 + rng.uniform01();
            norm += kv[m];
        }
        const double eta = 0.01 + rng.uniform01();
        const Multipliers out = entropic_update(make_multipliers(kv, 0.1), g, eta);
        CHECK(in_multiplier_domain(out.values, 0.1));

        // Reference in the linear domain.
        double s = 0.0;
        std::vector<double> cand(M);
        for (std::size_t m = 0; m < M; ++m) {
            cand[m] = kv[m] * std::exp(-eta * g[m]);
            s += cand[m];
        }
        const double c = std::min(1.0, 1.0 / (0.1 * s));
        for (std::size_t m = 0; m < M; ++m) {
            CHECK(out.values[m] == doctest::Approx(c * cand[m]).epsilon(1e-10));
        }
    }
}

TEST_CASE("run with one epoch returns the start point") {
    const TestingProblem p = toy2();
    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.t_override = 1;
    cfg.eta_override = 0.5;
    const SmdOutput out = run(p, cfg);
    CHECK(out.kappa_bar.values[0] == init_multipliers(0.1, 1).values[0]);
    CHECK(out.schedule.T == 1);
    CHECK(out.schedule.guarantee_out_of_range);  // M = 1 is outside the bound's range
}

TEST_CASE("run invariants on a short trajectory") {
    const TestingProblem p = toy2();
    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.epsilon = 0.3;
    cfg.n_draws = 2;
    cfg.seed = 11;
    cfg.t_override = 50;
    cfg.eta_override = 0.2;
    cfg.record_trace = true;
    cfg.eval_grid = {1.0, 2.0, 1.5};
    const SmdOutput out = run(p, cfg);

    REQUIRE(out.trace.has_value());
    REQUIRE(out.inner_products.has_value());
    REQUIRE(out.grid_bits.has_value());
    REQUIRE(out.trace->size() == 50);
    REQUIRE(out.inner_products->size() == 50);
    REQUIRE(out.grid_bits->size() == 50);

    SUBCASE("iterates stay feasible and average to kappa_bar") {
        double sum = 0.0;
        for (const auto& row : *out.trace) {
            REQUIRE(row.size() == 1);
            CHECK(in_multiplier_domain(row, 0.1));
            sum += row[0];
        }
        CHECK(out.kappa_bar.values[0] ==
              doctest::Approx(sum / 50.0).epsilon(1e-14));
        const SimplexWeights lam = normalize(out.kappa_bar);
        CHECK(out.lambda.weights == lam.weights);
        CHECK(out.lambda.scale == lam.scale);
    }

    SUBCASE("excess term matches the recorded inner products") {
        CHECK(out.excess_type1_term == excess_type1_term(*out.inner_products));
    }

    SUBCASE("grid bits replay through the public test") {
        for (std::size_t t = 0; t < 50; ++t) {
            const Multipliers kt = make_multipliers((*out.trace)[t], 0.1);
            for (std::size_t g = 0; g < cfg.eval_grid.size(); ++g) {
                const bool bit = (*out.grid_bits)[t][g] != 0;
                CHECK(bit == np_test(kt, cfg.eval_grid[g], p));
            }
        }
        for (std::size_t g = 0; g < cfg.eval_grid.size(); ++g) {
            std::vector<std::uint8_t> col(50);
            for (std::size_t t = 0; t < 50; ++t) col[t] = (*out.grid_bits)[t][g];
            CHECK(out.avg_test_on_grid[g].first == cfg.eval_grid[g]);
            CHECK(out.avg_test_on_grid[g].second == average_test_value(col));
        }
    }

    SUBCASE("identical configuration reproduces every output bit") {
        const SmdOutput again = run(p, cfg);
        CHECK(again.kappa_bar.values == out.kappa_bar.values);
        CHECK(again.excess_type1_term == out.excess_type1_term);
        CHECK(again.avg_test_on_grid == out.avg_test_on_grid);
        CHECK(*again.trace == *out.trace);
    }
}

TEST_CASE("run validates its configuration") {
    const TestingProblem p = toy2();
    SmdConfig cfg;
    cfg.alpha = 0.2;  // problem carries 0.1
    CHECK_THROWS_AS(run(p, cfg), std::invalid_argument);

    SmdConfig bad_t;
    bad_t.alpha = 0.1;
    bad_t.t_override = 0;
    CHECK_THROWS_AS(run(p, bad_t), std::invalid_argument);

    SmdConfig bad_eta;
    bad_eta.alpha = 0.1;
    bad_eta.t_override = 5;
    bad_eta.eta_override = 0.0;
    CHECK_THROWS_AS(run(p, bad_eta), std::invalid_argument);

    SmdConfig bad_init;
    bad_init.alpha = 0.1;
    bad_init.t_override = 5;
    bad_init.eta_override = 0.1;
    bad_init.init_kappa = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(run(p, bad_init), std::invalid_argument);

    SmdConfig far_init;
    far_init.alpha = 0.1;
    far_init.t_override = 5;
    far_init.eta_override = 0.1;
    far_init.init_kappa = std::vector<double>{11.0};
    CHECK_THROWS_AS(run(p, far_init), std::invalid_argument);
}

TEST_CASE("run_with_gradient replays the stochastic engine") {
    const TestingProblem p = gaussian_location_problem(6, -2.0, 0.0, 2.0, 0.1);
    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.n_draws = 3;
    cfg.seed = 29;
    cfg.t_override = 40;
    cfg.eta_override = 0.05;
    cfg.eval_grid = {0.5, 1.5};
    const SmdOutput direct = run(p, cfg);

    const GradientFn fn = [&](std::int64_t epoch, std::span<const double>,
                              std::span<const double> kappa, std::span<double> g_out) {
        const Multipliers mk =
            make_multipliers(std::vector<double>(kappa.begin(), kappa.end()), cfg.alpha);
        const auto g = estimate_subgradient(mk, p, cfg.n_draws, cfg.seed,
                                            static_cast<std::uint64_t>(epoch), cfg.policy);
        for (std::size_t m = 0; m < g.size(); ++m) g_out[m] = g[m];
    };
    const SmdOutput replay = run_with_gradient(p, cfg, fn);
    CHECK(replay.kappa_bar.values == direct.kappa_bar.values);
    CHECK(replay.excess_type1_term == direct.excess_type1_term);
    CHECK(replay.avg_test_on_grid == direct.avg_test_on_grid);
}

TEST_CASE("threshold recording matches the averaged grid test") {
    const TestingProblem p = gaussian_location_problem(8, -3.0, 0.0, 2.0, 0.1);
    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.n_draws = 1;
    cfg.seed = 4;
    cfg.t_override = 60;
    cfg.eta_override = 0.1;
    cfg.record_thresholds = true;
    cfg.eval_grid = {-1.0, 0.7, 1.3, 2.6};
    const SmdOutput out = run(p, cfg);
    REQUIRE(out.thresholds.has_value());
    REQUIRE(out.thresholds->size() == 60);

    const AveragedThresholdTest avg(*out.thresholds);
    for (std::size_t g = 0; g < cfg.eval_grid.size(); ++g) {
        CHECK(avg(cfg.eval_grid[g]) == out.avg_test_on_grid[g].second);
    }
}

TEST_CASE("randomized epoch execution replays the recorded trajectory") {
    const TestingProblem p = toy2();
    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.n_draws = 1;
    cfg.seed = 11;
    cfg.t_override = 6;
    cfg.eta_override = 0.5;
    cfg.record_trace = true;
    cfg.eval_grid = {2.0};
    const SmdOutput full = run(p, cfg);
    std::vector<std::uint8_t> col(6);
    for (std::size_t t = 0; t < 6; ++t) col[t] = (*full.grid_bits)[t][0];

    RngStream pick(123, streams::kEpochPick);
    std::vector<std::int64_t> counts(6, 0);
    double freq = 0.0;
    const std::int64_t draws = 2000;
    for (std::int64_t i = 0; i < draws; ++i) {
        std::int64_t tstar = 0;
        const int r = run_randomized_epoch(p, cfg, 2.0, pick, &tstar);
        REQUIRE(tstar >= 1);
        REQUIRE(tstar <= 6);
        ++counts[static_cast<std::size_t>(tstar - 1)];
        CHECK(r == static_cast<int>(col[static_cast<std::size_t>(tstar - 1)]));
        freq += r;
    }
    freq /= static_cast<double>(draws);
    const double pbar = average_test_value(col);
    CHECK(std::abs(freq - pbar) <
          4.0 * std::sqrt(std::max(pbar * (1.0 - pbar), 0.01) / static_cast<double>(draws)) +
              1e-12);
    for (const auto c : counts) {
        CHECK(std::abs(static_cast<double>(c) - draws / 6.0) <
              4.0 * std::sqrt(draws * (1.0 / 6.0) * (5.0 / 6.0)) + 1.0);
    }
}

TEST_CASE("extended run with mu fixed at zero reduces to the plain run") {
    const TestingProblem p = to_testing_problem(mix_dp(), 0.1);
    AlternativeFamily family;
    family.members.push_back(atom_member({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5}));
    family.members.push_back(atom_member({1.0, 2.0, 3.0}, {0.1, 0.5, 0.4}));
    family.weights = {0.5, 0.5};

    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.n_draws = 2;
    cfg.seed = 31;
    cfg.t_override = 80;
    cfg.eta_override = 0.05;

    const SmdOutput plain = run(p, cfg);
    const ExtendedOutput ext = run_extended(p, family, cfg);
    REQUIRE(ext.averages.kappa.size() == 1);
    REQUIRE(ext.averages.mu.size() == 2);
    CHECK(ext.averages.kappa[0] == plain.kappa_bar.values[0]);
    CHECK(ext.averages.mu[0] == 0.0);
    CHECK(ext.averages.mu[1] == 0.0);
    CHECK(ext.no_finite_sample_guarantee);
    CHECK(ext.schedule.T == 80);
}

TEST_CASE("extended run respects the joint cap and lifts worst-family power") {
    const TestingProblem p = to_testing_problem(mix_dp(), 0.1);
    const std::vector<std::vector<double>> alt = {{0.2, 0.3, 0.5}, {0.1, 0.5, 0.4}};
    AlternativeFamily family;
    family.members.push_back(atom_member({1.0, 2.0, 3.0}, alt[0]));
    family.members.push_back(atom_member({1.0, 2.0, 3.0}, alt[1]));
    family.weights = {0.5, 0.5};

    SmdConfig cfg;
    cfg.alpha = 0.1;
    cfg.epsilon = 0.1;
    cfg.n_draws = 8;
    cfg.seed = 7;

    const ExtendedOutput ext = run_extended(p, family, cfg, std::vector<double>{0.3, 0.3});
    double joint = 0.0;
    for (const double v : ext.averages.kappa) {
        CHECK(v >= 0.0);
        joint += v;
    }
    for (const double v : ext.averages.mu) {
        CHECK(v >= 0.0);
        joint += v;
    }
    CHECK(joint <= 10.0 + kDomainSlack);

    const SmdOutput plain = run(p, cfg);

    // Exact power under each family member of the tests at the averages.
    const Multipliers pk = make_multipliers(plain.kappa_bar.values, 0.1);
    double worst_plain = 1.0, worst_ext = 1.0;
    for (std::size_t i = 0; i < 2; ++i) {
        double pw_plain = 0.0, pw_ext = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double y = 1.0 + static_cast<double>(k);
            if (np_test(pk, y, p)) pw_plain += alt[i][k];
            if (extended_np_test(ext.averages, y, p, family)) pw_ext += alt[i][k];
        }
        worst_plain = std::min(worst_plain, pw_plain);
        worst_ext = std::min(worst_ext, pw_ext);
    }
    // The unbiasedness pressure must not cost the disfavored alternative.
    CHECK(worst_ext >= worst_plain - 0.05);
}
