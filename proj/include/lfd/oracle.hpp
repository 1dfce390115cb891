#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lfd/model.hpp"
#include "lfd/nptest.hpp"
#include "lfd/smd.hpp"

namespace lfd {

enum class OracleMethod { AnalyticGaussian, SortM1, GridPlusMD, DeterministicMd };

struct OracleSolution {
    double v_bar = 0.0;
    std::optional<std::vector<double>> test_on_atoms;  // per-atom rejection probs
    std::optional<Multipliers> kappa_star;
    OracleMethod method_tag = OracleMethod::AnalyticGaussian;
    std::optional<double> grid_value;       // best exhaustive-grid value
    std::optional<double> refined_value;    // best descent-refined value
    std::optional<double> certificate_gap;  // v_bar exceeds the true value by at most this
};

// Largest attainable power for the location family whose composite null ends
// at mean 0 and whose alternative has mean theta1: Phi(theta1 - z_{1-alpha}).
OracleSolution gaussian_oracle(double theta1, double alpha);

// Exact most powerful level-alpha test for a single discrete null: atoms are
// taken in decreasing likelihood-ratio order with randomization on the
// boundary atom. Also returns the dual multiplier attaining the same value.
OracleSolution np_oracle_m1(const DiscreteProblem& dp, double alpha);

// Closed-form dual objective on a discrete problem:
// f(kappa) = sum_a max(g_a - sum_m kappa_m f_{m,a}, 0) + alpha sum_m kappa_m.
double exact_dual_value(const DiscreteProblem& dp, double alpha,
                        std::span<const double> kappa);

// Mirror descent with exactly summed subgradients; v_bar holds the exactly
// evaluated dual objective at the averaged iterate.
OracleSolution deterministic_md(const DiscreteProblem& dp, double alpha, double epsilon,
                                std::optional<std::int64_t> t_override = {},
                                std::optional<double> eta_override = {},
                                std::optional<std::vector<double>> start = {});

// Exhaustive minimization of the exact dual objective over a regular grid on
// the feasible box, refined by deterministic descent from both the best grid
// point and the standard initialization. The reported value is an upper bound
// on the true optimum, certified to within refine_epsilon.
OracleSolution dual_grid_oracle(const DiscreteProblem& dp, double alpha,
                                std::int64_t grid_points_per_axis,
                                double refine_epsilon = 0.02);

struct ConcentrationRun {
    std::int64_t run = 0;
    std::uint64_t seed = 0;
    double f_value = 0.0;
    double gap = 0.0;
    bool failed = false;
};

struct ConcentrationReport {
    std::vector<ConcentrationRun> rows;
    std::int64_t failure_count = 0;
    double failure_rate = 0.0;
    double bound = 0.0;             // exp(-omega^2)
    double v_bar = 0.0;             // reference optimum used for gaps
    double inflated_epsilon = 0.0;  // (1 + 2 omega / sqrt(ln M * N * (1-alpha)^2)) * epsilon
    Schedule schedule_used;
};

// Repeated stochastic runs with independently derived seeds; a run fails when
// its exactly evaluated dual gap exceeds the inflated target.
ConcentrationReport concentration_harness(const DiscreteProblem& dp, double alpha,
                                          double epsilon, std::int64_t n_draws,
                                          double omega, std::int64_t runs,
                                          std::uint64_t master_seed);

}  // namespace lfd
