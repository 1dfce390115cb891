#include "lfd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lfd/rng.hpp"
#include "lfd/stats.hpp"

namespace lfd {

TestEvaluation mc_size_power(const TestFn& test, const TestingProblem& problem,
                             std::int64_t draws, std::uint64_t seed, ExecPolicy policy) {
    if (draws < 1) throw std::invalid_argument("mc_size_power: draws must be >= 1");
    const std::size_t M = problem.M();
    TestEvaluation ev;
    ev.size_per_null.resize(M);
    ev.std_errors.resize(M + 1);
    ev.draws_used = draws;

    // Member index M is the alternative; each member averages `draws` cells.
    std::vector<double> means(M + 1);
    parallel_for(policy, static_cast<std::int64_t>(M) + 1, [&](std::int64_t member) {
        const auto& density = member < static_cast<std::int64_t>(M)
                                  ? problem.nulls[static_cast<std::size_t>(member)]
                                  : problem.alternative;
        const double total = deterministic_block_sum(
            ExecPolicy::Serial, draws, [&](std::int64_t i) {
                RngStream cell(seed, streams::kEval, static_cast<std::uint64_t>(member),
                               static_cast<std::uint64_t>(i));
                return test(density.sampler(cell));
            });
        means[static_cast<std::size_t>(member)] = total / static_cast<double>(draws);
    });

    for (std::size_t m = 0; m < M; ++m) {
        ev.size_per_null[m] = means[m];
        ev.std_errors[m] = binomial_std_error(means[m], draws);
    }
    ev.power = means[M];
    ev.std_errors[M] = binomial_std_error(means[M], draws);
    return ev;
}

TestEvaluation exact_size_power(const TestFn& test, const DiscreteProblem& dp) {
    const std::size_t M = dp.null_masses.size();
    const std::size_t K = dp.atoms.size();
    std::vector<double> phi(K);
    for (std::size_t k = 0; k < K; ++k) {
        phi[k] = test(dp.atoms[k]);
        if (!(phi[k] >= 0.0 && phi[k] <= 1.0)) {
            throw std::invalid_argument("exact_size_power: test value outside [0,1]");
        }
    }
    TestEvaluation ev;
    ev.size_per_null.resize(M);
    ev.std_errors.assign(M + 1, 0.0);
    ev.draws_used = 0;
    for (std::size_t m = 0; m < M; ++m) {
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += phi[k] * dp.null_masses[m][k];
        ev.size_per_null[m] = s;
    }
    double p = 0.0;
    for (std::size_t k = 0; k < K; ++k) p += phi[k] * dp.alt_masses[k];
    ev.power = p;
    return ev;
}

TestEvaluation evaluate(const TestFn& test, const TestingProblem& problem,
                        const EvalBackend& backend) {
    if (backend.kind == EvalBackend::Kind::Exact) {
        if (!problem.discrete) {
            throw std::invalid_argument("evaluate: exact backend needs a discrete problem");
        }
        return exact_size_power(test, *problem.discrete);
    }
    return mc_size_power(test, problem, backend.draws, backend.seed, backend.policy);
}

DualDiagnostics dual_objective(const Multipliers& kappa, const TestingProblem& problem,
                               const EvalBackend& backend,
                               std::optional<double> v_bar_reference) {
    const std::size_t M = problem.M();
    if (kappa.values.size() != M) {
        throw std::invalid_argument("dual_objective: dimension mismatch");
    }
    if (kappa.alpha != problem.alpha) {
        throw std::invalid_argument("dual_objective: alpha differs between kappa and problem");
    }
    if (!in_multiplier_domain(kappa.values, kappa.alpha)) {
        throw std::invalid_argument("dual_objective: kappa outside the domain");
    }
    const TestFn phi = [&kappa, &problem](double y) {
        return np_test(kappa, y, problem) ? 1.0 : 0.0;
    };
    DualDiagnostics d;
    d.evaluation = evaluate(phi, problem, backend);
    d.slackness.resize(M);
    double f = d.evaluation.power;
    double var = d.evaluation.std_errors[M] * d.evaluation.std_errors[M];
    for (std::size_t m = 0; m < M; ++m) {
        d.slackness[m] = kappa.values[m] * (d.evaluation.size_per_null[m] - problem.alpha);
        f -= d.slackness[m];
        const double se = kappa.values[m] * d.evaluation.std_errors[m];
        var += se * se;
    }
    d.f_value = f;
    d.f_std_error = std::sqrt(var);
    d.v_bar_reference = v_bar_reference;
    if (v_bar_reference.has_value()) d.gap = f - *v_bar_reference;
    return d;
}

double excess_type1_term(std::span<const double> inner_products) {
    if (inner_products.empty()) {
        throw std::invalid_argument("excess_type1_term: empty trace");
    }
    double s = 0.0;
    for (double ip : inner_products) s += ip;
    return -s / static_cast<double>(inner_products.size());
}

EpsilonLfdResult epsilon_lfd_check(double f_value, double v_bar, double epsilon_target) {
    EpsilonLfdResult r;
    r.margin = v_bar + epsilon_target - f_value;
    r.pass = f_value <= v_bar + epsilon_target;
    return r;
}

NearOptimalityReport nearly_optimal_check(const TestEvaluation& te, double v_bar,
                                          double alpha, double epsilon, double delta) {
    NearOptimalityReport r;
    r.size_bound = alpha * (1.0 + delta);
    r.power_bound = v_bar - epsilon;
    r.worst_null = 0;
    r.worst_size = 0.0;
    for (std::size_t m = 0; m < te.size_per_null.size(); ++m) {
        if (te.size_per_null[m] > r.worst_size) {
            r.worst_size = te.size_per_null[m];
            r.worst_null = m;
        }
    }
    r.size_ok = r.worst_size <= r.size_bound;
    r.power_ok = te.power >= r.power_bound;
    r.pass = r.size_ok && r.power_ok;
    return r;
}

SlacknessReport complementary_slackness(const Multipliers& kappa,
                                        std::span<const double> sizes, double alpha,
                                        double tol) {
    if (kappa.values.size() != sizes.size()) {
        throw std::invalid_argument("complementary_slackness: dimension mismatch");
    }
    SlacknessReport r;
    r.residuals.resize(sizes.size());
    for (std::size_t m = 0; m < sizes.size(); ++m) {
        r.residuals[m] = kappa.values[m] * (sizes[m] - alpha);
        r.max_abs = std::max(r.max_abs, std::abs(r.residuals[m]));
    }
    r.pass = r.max_abs <= tol;
    return r;
}

AveragedThresholdTest::AveragedThresholdTest(std::vector<double> thresholds)
    : sorted_(std::move(thresholds)) {
    if (sorted_.empty()) {
        throw std::invalid_argument("AveragedThresholdTest: no thresholds");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double AveragedThresholdTest::operator()(double y) const {
    const auto below = std::lower_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin();
    return static_cast<double>(below) / static_cast<double>(sorted_.size());
}

}  // namespace lfd
