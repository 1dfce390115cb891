#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lfd/model.hpp"

namespace lfd {

/*
 * Multiplier-indexed tests. A nonnegative vector kappa with
 * sum_m kappa_m <= 1/alpha induces the test that rejects exactly where the
 * alternative density exceeds the kappa-weighted null mixture. Ties accept,
 * and the comparison is a strict floating-point > in log space with no
 * tolerance band: a tolerance would bias size, and exact comparisons keep
 * runs reproducible.
 */

struct Multipliers {
    std::vector<double> values;
    double alpha = 0.0;
};

// Feasibility slack on the l1 cap; absorbs accumulated rounding in long runs.
inline constexpr double kDomainSlack = 1e-9;

// Validates coordinates >= 0 and the l1 cap before wrapping.
Multipliers make_multipliers(std::vector<double> values, double alpha);

bool in_multiplier_domain(std::span<const double> values, double alpha);

// Direction/scale split of a multiplier vector: weights on the simplex plus
// the l1 norm. The weights are the candidate least-favorable mixture.
struct SimplexWeights {
    std::vector<double> weights;
    double scale = 0.0;
};

// kappa / ||kappa||_1 with the norm kept as `scale`; rejects the zero vector.
SimplexWeights normalize(const Multipliers& kappa);

// Multipliers for the unbiasedness-constrained extension: kappa on the nulls,
// mu on the extra alternatives, alt_weights the mixture defining the
// compound alternative g = sum_i w_i g_i.
struct ExtendedMultipliers {
    std::vector<double> kappa;
    std::vector<double> mu;
    std::vector<double> alt_weights;
};

// Extra alternative densities g_i with their mixture weights.
struct AlternativeFamily {
    std::vector<DensityMember> members;
    std::vector<double> weights;
};

// Builds the TestingProblem whose alternative is the weighted mixture of the
// family members (log-sum-exp of the member log densities).
TestingProblem with_mixture_alternative(std::vector<DensityMember> nulls, double alpha,
                                        const AlternativeFamily& family);

// Rejects iff ln g(y) > ln sum_m kappa_m f_m(y); equality accepts.
bool np_test(const Multipliers& kappa, double y, const TestingProblem& problem);

// Core comparison on caller-provided buffers: log_kappa holds ln(kappa_m)
// (-infinity for zeros) and log_pdfs a fill_log_pdfs buffer of M+1 entries.
// Every rejection decision in the library funnels through this function.
bool np_test_from_logs(std::span<const double> log_kappa,
                       std::span<const double> log_pdfs);

// Extension test: rejects iff g(y) + sum_i mu_i g_i(y) > sum_m kappa_m f_m(y),
// evaluated log-safely with the mu term on the left side. mu = 0 reduces to
// np_test exactly.
bool extended_np_test(const ExtendedMultipliers& em, double y,
                      const TestingProblem& problem, const AlternativeFamily& family);

// Mean of per-epoch test bits; the averaged test's value at the point the
// bits were recorded for. Throws on an empty sequence.
double average_test_value(std::span<const std::uint8_t> per_epoch_bits);

// ln(sum kappa_m f_m(y)) taking linear-domain multipliers.
double log_mixture(const Multipliers& kappa, double y, const TestingProblem& problem);

}  // namespace lfd
