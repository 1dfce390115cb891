#include "lfd/nptest.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lfd {

namespace {
const double kNegInf = -std::numeric_limits<double>::infinity();
}

bool in_multiplier_domain(std::span<const double> values, double alpha) {
    double sum = 0.0;
    for (double v : values) {
        if (!(v >= 0.0)) return false;
        sum += v;
    }
    return sum <= 1.0 / alpha + kDomainSlack;
}

Multipliers make_multipliers(std::vector<double> values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("make_multipliers: alpha must lie in (0,1)");
    }
    if (!in_multiplier_domain(values, alpha)) {
        throw std::invalid_argument(
            "make_multipliers: coordinates must be nonnegative with l1 norm <= 1/alpha");
    }
    return Multipliers{std::move(values), alpha};
}

SimplexWeights normalize(const Multipliers& kappa) {
    double sum = 0.0;
    for (double v : kappa.values) sum += v;
    if (!(sum > 0.0)) {
        throw std::invalid_argument("normalize: zero multiplier vector has no direction");
    }
    SimplexWeights sw;
    sw.scale = sum;
    sw.weights.resize(kappa.values.size());
    for (std::size_t m = 0; m < kappa.values.size(); ++m) {
        sw.weights[m] = kappa.values[m] / sum;
    }
    return sw;
}

TestingProblem with_mixture_alternative(std::vector<DensityMember> nulls, double alpha,
                                        const AlternativeFamily& family) {
    if (family.members.empty() || family.members.size() != family.weights.size()) {
        throw std::invalid_argument("with_mixture_alternative: bad alternative family");
    }
    double wsum = 0.0;
    for (double w : family.weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("alternative weights must be >= 0");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12) {
        throw std::invalid_argument("alternative weights must sum to 1");
    }

    TestingProblem p;
    p.alpha = alpha;
    p.sample_space_tag = SampleSpace::Continuous;
    p.nulls = std::move(nulls);

    std::vector<double> log_w(family.weights.size());
    for (std::size_t i = 0; i < family.weights.size(); ++i) {
        log_w[i] = family.weights[i] > 0.0 ? std::log(family.weights[i]) : kNegInf;
    }
    auto members = family.members;  // captured copy
    p.alternative.log_pdf = [members, log_w](double y) {
        double mx = kNegInf;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const double t = log_w[i] + members[i].log_pdf(y);
            if (t > mx) mx = t;
        }
        if (!(mx > kNegInf)) return kNegInf;
        double s = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            s += std::exp(log_w[i] + members[i].log_pdf(y) - mx);
        }
        return mx + std::log(s);
    };
    std::vector<double> cum(family.weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < family.weights.size(); ++i) {
        acc += family.weights[i] / wsum;
        cum[i] = acc;
    }
    cum.back() = 1.0;
    p.alternative.sampler = [members, cum](RngStream& s) {
        const double u = s.uniform01();
        std::size_t i = 0;
        while (i + 1 < cum.size() && u >= cum[i]) ++i;
        return members[i].sampler(s);
    };
    return p;
}

bool np_test_from_logs(std::span<const double> log_kappa,
                       std::span<const double> log_pdfs) {
    const std::size_t M = log_kappa.size();
    if (log_pdfs.size() != M + 1) {
        throw std::invalid_argument("np_test_from_logs: buffer must hold M + 1 entries");
    }
    const double log_g = log_pdfs[M];
    const double log_mix = log_mixture_from_logs(log_kappa, log_pdfs.first(M));
    return log_g > log_mix;
}

bool np_test(const Multipliers& kappa, double y, const TestingProblem& problem) {
    const std::size_t M = problem.nulls.size();
    if (kappa.values.size() != M) {
        throw std::invalid_argument("np_test: multiplier dimension mismatch");
    }
    thread_local std::vector<double> lp, lk;
    lp.resize(M + 1);
    lk.resize(M);
    fill_log_pdfs(problem, y, lp);
    for (std::size_t m = 0; m < M; ++m) lk[m] = std::log(kappa.values[m]);
    return np_test_from_logs(lk, lp);
}

bool extended_np_test(const ExtendedMultipliers& em, double y,
                      const TestingProblem& problem, const AlternativeFamily& family) {
    const std::size_t M = problem.nulls.size();
    const std::size_t I = family.members.size();
    if (em.kappa.size() != M || em.mu.size() != I) {
        throw std::invalid_argument("extended_np_test: dimension mismatch");
    }
    thread_local std::vector<double> lp, lk, left_terms;
    lp.resize(M + 1);
    lk.resize(M);
    fill_log_pdfs(problem, y, lp);
    for (std::size_t m = 0; m < M; ++m) lk[m] = std::log(em.kappa[m]);
    const double log_mix = log_mixture_from_logs(lk, std::span<const double>(lp.data(), M));

    // Left side: ln(g(y) + sum_i mu_i g_i(y)), log-sum-exp over I + 1 terms.
    left_terms.resize(I + 1);
    left_terms[0] = lp[M];
    for (std::size_t i = 0; i < I; ++i) {
        left_terms[i + 1] = std::log(em.mu[i]) + family.members[i].log_pdf(y);
    }
    double mx = kNegInf;
    for (double t : left_terms) {
        if (t > mx) mx = t;
    }
    if (!(mx > kNegInf)) return false;  // zero left side never exceeds the mixture
    double s = 0.0;
    for (double t : left_terms) s += std::exp(t - mx);
    const double left = mx + std::log(s);
    return left > log_mix;
}

double average_test_value(std::span<const std::uint8_t> per_epoch_bits) {
    if (per_epoch_bits.empty()) {
        throw std::invalid_argument("average_test_value: empty bit sequence");
    }
    std::int64_t count = 0;
    for (std::uint8_t b : per_epoch_bits) count += b;
    return static_cast<double>(count) / static_cast<double>(per_epoch_bits.size());
}

double log_mixture(const Multipliers& kappa, double y, const TestingProblem& problem) {
    return log_mixture_values(kappa.values, y, problem);
}

}  // namespace lfd
