#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lfd/kernels.hpp"
#include "lfd/nptest.hpp"

namespace lfd {

/*
 * Stochastic mirror descent on the dual of the most-powerful-test program,
 * with the negative-entropy mirror map. Iterates live in
 * X = {kappa >= 0 : ||kappa||_1 <= 1/alpha}; updates are multiplicative with
 * an l1-cap rescale, performed in log space. The reported solution is the
 * epoch average kappa_bar, and the averaged test is the uniform mixture of
 * the per-epoch tests.
 */

struct Schedule {
    std::int64_t T = 0;
    double eta = 0.0;
    // The finite-sample guarantee assumes alpha in (0, 1/2) and M > e/alpha;
    // outside that range the schedule still applies but carries no bound.
    bool guarantee_out_of_range = false;
};

// T = ceil(4(1-alpha)^2 / (alpha^2 epsilon^2) * ln M), eta = alpha*epsilon /
// (2(1-alpha)^2). Requires M >= 2 and epsilon > 0.
Schedule schedule(double alpha, double epsilon, std::int64_t M);

// Uniform start: 1/e per coordinate when M < e/alpha, else 1/(alpha*M).
// Strictly positive, which multiplicative updates require.
Multipliers init_multipliers(double alpha, std::int64_t M);

// Unbiased subgradient estimate at kappa: coordinate m is
// -((1/N) sum_n phi_kappa(Y_mn) - alpha) with Y_mn fresh draws from f_m.
// Draw cells are keyed by (seed, epoch, m, n), so coordinates use
// independent substreams and repeated calls with distinct epochs are
// independent.
std::vector<double> estimate_subgradient(const Multipliers& kappa,
                                         const TestingProblem& problem,
                                         std::int64_t n_draws, std::uint64_t seed,
                                         std::uint64_t epoch = 0,
                                         ExecPolicy policy = ExecPolicy::Parallel);

// One mirror step: kappa_m <- c * kappa_m * exp(-eta g_m) with
// c = min{1, 1/(alpha sum_m kappa_m exp(-eta g_m))}. Linear-domain wrapper
// over the log-domain routine below.
Multipliers entropic_update(const Multipliers& kappa_t, std::span<const double> g_hat,
                            double eta);

namespace detail {
// In-place log-domain step used by the engine; the sum in c goes through
// log-sum-exp. -infinity coordinates (zero multipliers) stay -infinity.
void entropic_update_logs(std::span<double> log_kappa, std::span<const double> g_hat,
                          double eta, double alpha);
}  // namespace detail

struct SmdConfig {
    double alpha = 0.1;
    double epsilon = 0.1;
    std::int64_t n_draws = 1;
    double omega = 1.0;
    std::uint64_t seed = 1;
    std::optional<std::int64_t> t_override;
    std::optional<double> eta_override;
    std::vector<double> eval_grid;  // averaged-test accumulation points
    bool record_trace = false;
    bool record_thresholds = false;  // requires problem.mlr_threshold
    std::optional<std::vector<double>> init_kappa;  // replaces the default start
    ExecPolicy policy = ExecPolicy::Parallel;
};

struct SmdState {
    std::int64_t t = 0;
    std::vector<double> log_kappa;
    std::vector<double> kappa_sum;
    double excess_sum = 0.0;
    std::vector<std::int64_t> grid_reject_sum;
    std::uint64_t seed = 0;  // stream identity; cells derive (seed, epoch, m, n)
};

struct SmdOutput {
    Multipliers kappa_bar;
    SimplexWeights lambda;
    Schedule schedule;
    double excess_type1_term = 0.0;
    std::vector<std::pair<double, double>> avg_test_on_grid;  // (y, phi_bar(y))

    // record_trace extras: per-epoch linear iterates, per-epoch subgradient
    // inner products g_t . kappa_t, and per-epoch grid bits.
    std::optional<std::vector<std::vector<double>>> trace;
    std::optional<std::vector<double>> inner_products;
    std::optional<std::vector<std::vector<std::uint8_t>>> grid_bits;

    // record_thresholds extra: per-epoch rejection thresholds c_t, in epoch
    // order; the averaged test at y is the fraction of entries below y.
    std::optional<std::vector<double>> thresholds;
};

// Full run: resolve the schedule, initialize, iterate T epochs (updating
// after each epoch except the last), and average. Identical (problem,
// config) produce bit-identical output regardless of execution policy.
SmdOutput run(const TestingProblem& problem, const SmdConfig& config);

// Exact-gradient variant of the same engine: `gradient` fills the (true)
// subgradient at the current iterate instead of the Monte-Carlo estimator.
// Epoch indices are passed so implementations may key any randomness.
using GradientFn = std::function<void(std::int64_t epoch, std::span<const double> log_kappa,
                                      std::span<const double> kappa,
                                      std::span<double> g_out)>;
SmdOutput run_with_gradient(const TestingProblem& problem, const SmdConfig& config,
                            const GradientFn& gradient);

// Randomized-epoch execution: draw t* uniform on {1..T} from `tstar_rng`,
// run exactly t* epochs of the config's trajectory, and return the epoch-t*
// test's decision at y. Over t* draws with the trajectory fixed, the
// rejection frequency equals the averaged test's value at y.
int run_randomized_epoch(const TestingProblem& problem, const SmdConfig& config, double y,
                         RngStream& tstar_rng, std::int64_t* t_star_out = nullptr);

// Extension run with extra alternatives: multiplicative updates on (kappa,
// mu) under the joint cap ||kappa||_1 + ||mu||_1 <= 1/alpha. Null gradient
// coordinates are -(mean phi - alpha); alternative coordinates are
// -(alpha - mean phi under g_i). mu starts at mu_init (zeros by default, in
// which case the run reduces exactly to `run`). The output carries no
// finite-sample guarantee.
struct ExtendedOutput {
    ExtendedMultipliers averages;
    Schedule schedule;
    bool no_finite_sample_guarantee = true;
};
ExtendedOutput run_extended(const TestingProblem& problem, const AlternativeFamily& family,
                            const SmdConfig& config,
                            const std::optional<std::vector<double>>& mu_init = {});

}  // namespace lfd
