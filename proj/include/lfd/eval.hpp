#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lfd/kernels.hpp"
#include "lfd/model.hpp"
#include "lfd/nptest.hpp"

namespace lfd {

// A (possibly randomized) test: y -> rejection probability in [0,1].
using TestFn = std::function<double(double)>;

struct TestEvaluation {
    std::vector<double> size_per_null;  // one entry per null
    double power = 0.0;                 // rejection rate under the alternative
    std::vector<double> std_errors;     // sizes then power (M+1); zeros when exact
    std::int64_t draws_used = 0;        // per integral; 0 for exact summation
};

struct DualDiagnostics {
    double f_value = 0.0;
    double f_std_error = 0.0;                // delta-method combination; 0 when exact
    std::optional<double> v_bar_reference;
    std::optional<double> gap;               // f_value - v_bar_reference
    std::vector<double> slackness;           // kappa_m * (size_m - alpha)
    TestEvaluation evaluation;
};

struct EvalBackend {
    enum class Kind { MonteCarlo, Exact };
    Kind kind = Kind::MonteCarlo;
    std::int64_t draws = 100000;
    std::uint64_t seed = 1;
    ExecPolicy policy = ExecPolicy::Parallel;
};

// Monte-Carlo size under every null and power under the alternative.
// Draw (member, i) owns the substream (seed, kEval, member, i), so results
// are bit-identical across execution policies.
TestEvaluation mc_size_power(const TestFn& test, const TestingProblem& problem,
                             std::int64_t draws, std::uint64_t seed,
                             ExecPolicy policy = ExecPolicy::Parallel);

// Exact counting-measure integrals on a discrete problem; test is evaluated
// at each atom value.
TestEvaluation exact_size_power(const TestFn& test, const DiscreteProblem& dp);

// Backend dispatch; Exact requires the problem to carry discrete masses.
TestEvaluation evaluate(const TestFn& test, const TestingProblem& problem,
                        const EvalBackend& backend);

// Dual objective f(kappa) = power(phi_kappa) - sum_m kappa_m (size_m - alpha)
// evaluated through the deterministic likelihood-ratio test.
DualDiagnostics dual_objective(const Multipliers& kappa, const TestingProblem& problem,
                               const EvalBackend& backend,
                               std::optional<double> v_bar_reference = {});

// -(1/T) sum of recorded per-epoch inner products <G_hat_t, kappa_t>.
double excess_type1_term(std::span<const double> inner_products);

struct EpsilonLfdResult {
    bool pass = false;
    double margin = 0.0;  // v_bar + epsilon - f_value
};

EpsilonLfdResult epsilon_lfd_check(double f_value, double v_bar, double epsilon_target);

struct NearOptimalityReport {
    bool size_ok = false;    // size_m <= alpha (1 + delta) for every null
    bool power_ok = false;   // power >= v_bar - epsilon
    bool pass = false;
    std::size_t worst_null = 0;  // index of the largest size
    double worst_size = 0.0;
    double size_bound = 0.0;
    double power_bound = 0.0;
};

NearOptimalityReport nearly_optimal_check(const TestEvaluation& te, double v_bar,
                                          double alpha, double epsilon, double delta);

struct SlacknessReport {
    std::vector<double> residuals;  // kappa_m * (size_m - alpha)
    double max_abs = 0.0;
    bool pass = false;
};

SlacknessReport complementary_slackness(const Multipliers& kappa,
                                        std::span<const double> sizes, double alpha,
                                        double tol);

// Averaged test for runs whose per-epoch tests are right-tail thresholds:
// value at y is the fraction of epochs with threshold strictly below y.
class AveragedThresholdTest {
public:
    explicit AveragedThresholdTest(std::vector<double> thresholds);
    double operator()(double y) const;
    std::int64_t epochs() const { return static_cast<std::int64_t>(sorted_.size()); }

private:
    std::vector<double> sorted_;
};

}  // namespace lfd
