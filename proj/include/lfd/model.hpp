#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfd/rng.hpp"

namespace lfd {

/*
 * Testing problems: M null densities f_1..f_M against one alternative g,
 * all with respect to a common reference measure. Continuous members carry
 * Lebesgue densities, discrete members counting-measure masses. All density
 * work happens in natural-log space; log_pdf returns -infinity exactly where
 * the density vanishes.
 */

struct DensityMember {
    std::function<double(double)> log_pdf;
    std::function<double(RngStream&)> sampler;
};

struct DiscreteProblem {
    std::vector<double> atoms;                      // K distinct sample points
    std::vector<std::vector<double>> null_masses;   // M rows of K masses
    std::vector<double> alt_masses;                 // K masses
};

enum class SampleSpace { Continuous, Discrete };

// Precomputed lookup structure shared by all members of a discrete problem.
struct DiscreteTables {
    std::vector<double> sorted_atoms;
    std::vector<int> sorted_to_orig;
    std::vector<std::vector<double>> log_null_masses;  // M x K, original atom order
    std::vector<double> log_alt_masses;                // K
    std::vector<std::vector<double>> null_cum;         // per-member sampling CDF
    std::vector<double> alt_cum;

    // Index of the atom equal to y, or -1. Samples originate from the atom
    // table itself, so exact floating-point equality is the right test.
    int find(double y) const;
};

struct TestingProblem {
    std::vector<DensityMember> nulls;
    DensityMember alternative;
    double alpha = 0.0;
    SampleSpace sample_space_tag = SampleSpace::Continuous;

    // Discrete backing data; set iff sample_space_tag == Discrete.
    std::shared_ptr<const DiscreteProblem> discrete;
    std::shared_ptr<const DiscreteTables> discrete_tables;

    // Location-family metadata; set by gaussian_location_problem. Enables the
    // dense evaluation path and, when the alternative mean exceeds the whole
    // null grid, the single-threshold solver below.
    std::vector<double> null_locations;
    std::optional<double> alt_location;

    // For families with monotone likelihood ratio, every multiplier vector
    // induces a rejection region of the form {y > c}. Given ln(kappa_m)
    // (-infinity entries allowed), returns that c; -infinity when kappa = 0.
    // Null when no such structure is known.
    std::function<double(std::span<const double>)> mlr_threshold;

    std::size_t M() const { return nulls.size(); }
};

// Shared closed forms, used by both the dense path and member closures so the
// two produce bit-identical values.
inline double gaussian_log_pdf(double y, double mean) {
    const double d = y - mean;
    return -0.5 * d * d - 0.91893853320467274178032973640562;
}

// Composite Gaussian location problem: nulls N(theta, 1) on an equally spaced
// grid listed in decreasing order (nulls[0] has mean hi), alternative
// N(theta1, 1). Requires M >= 2, lo < hi, alpha in (0,1).
TestingProblem gaussian_location_problem(std::int64_t M, double lo, double hi,
                                         double theta1, double alpha);

// Single Gaussian member, for hand-built problems.
DensityMember gaussian_member(double mean);

// Wraps a discrete table as a TestingProblem whose sample points are the atom
// values. Masses may carry small normalization drift (validate reports it);
// samplers normalize internally.
TestingProblem to_testing_problem(const DiscreteProblem& dp, double alpha);

// Reads the discrete CSV format: header `atom,f_1,...,f_M,g`, one row per
// atom. Throws on structural problems (bad header, ragged rows, duplicate
// atoms, negative masses); normalization drift is left to validate.
DiscreteProblem load_discrete_csv(const std::string& path);

// Fills log densities of all members at y: out[0..M-1] the nulls, out[M] the
// alternative. out.size() must be M + 1. This is the single evaluation path
// used everywhere a test is computed, which is what makes independently
// computed rejection decisions bit-identical.
void fill_log_pdfs(const TestingProblem& problem, double y, std::span<double> out);

// ln(sum_m kappa_m f_m(y)) with the max-shift trick, -infinity when the
// mixture vanishes. `log_kappa` holds ln(kappa_m) with -infinity for zeros.
// `log_pdfs` holds the member log densities at the point (first M entries of
// a fill_log_pdfs buffer).
double log_mixture_from_logs(std::span<const double> log_kappa,
                             std::span<const double> log_pdfs);

// Convenience overloads evaluating the member densities internally.
double log_mixture_values(std::span<const double> kappa_values, double y,
                          const TestingProblem& problem);

// Diagnostics, empty when clean. Discrete problems: mass normalization,
// negative masses, duplicate atoms. Continuous problems: a fixed-seed
// Kolmogorov-Smirnov smoke check of each sampler against the CDF obtained by
// trapezoid quadrature of exp(log_pdf), plus a quadrature mass check.
std::vector<std::string> validate(const TestingProblem& problem,
                                  std::int64_t smoke_draws = 2000);

}  // namespace lfd
