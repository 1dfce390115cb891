#include "lfd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lfd/csvio.hpp"

namespace lfd {

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t pick_from_cum(const std::vector<double>& cum, double u) {
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t j = static_cast<std::size_t>(it - cum.begin());
    if (j >= cum.size()) j = cum.size() - 1;
    return j;
}

std::vector<double> cumulative_normalized(const std::vector<double>& masses,
                                          const std::string& who) {
    double total = 0.0;
    for (double m : masses) total += std::max(m, 0.0);
    if (!(total > 0.0)) {
        throw std::invalid_argument(who + " has no positive mass to sample from");
    }
    std::vector<double> cum(masses.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < masses.size(); ++k) {
        acc += std::max(masses[k], 0.0) / total;
        cum[k] = acc;
    }
    cum.back() = 1.0;
    return cum;
}

std::vector<double> log_of_masses(const std::vector<double>& masses) {
    std::vector<double> lm(masses.size());
    for (std::size_t k = 0; k < masses.size(); ++k) {
        lm[k] = masses[k] > 0.0 ? std::log(masses[k]) : kNegInf;
    }
    return lm;
}

/*
 * Rejection threshold for Gaussian location mixtures. With nulls N(theta_m, 1),
 * alternative N(theta1, 1), theta1 above the whole grid, the log likelihood
 * gap h(y) = ln(sum kappa_m f_m(y)) - ln g(y) is strictly decreasing:
 *   h(y)  = LSE_m(ln kappa_m - (y-theta_m)^2/2) + (y-theta1)^2/2
 *   h'(y) = sum_m w_m theta_m - theta1 <= max theta_m - theta1 < 0
 * with w the softmax weights of the LSE. The unique root c gives the
 * rejection region {y > c}. Safeguarded Newton on a sign-change bracket.
 */
struct ThresholdSolver {
    std::vector<double> thetas;
    double theta1;

    void eval(std::span<const double> log_kappa, double y, double& h, double& hp) const {
        double mx = kNegInf;
        for (std::size_t m = 0; m < thetas.size(); ++m) {
            const double d = y - thetas[m];
            const double t = log_kappa[m] - 0.5 * d * d;
            if (t > mx) mx = t;
        }
        if (!(mx > kNegInf)) {
            h = kNegInf;
            hp = 0.0;
            return;
        }
        double s = 0.0, stheta = 0.0;
        for (std::size_t m = 0; m < thetas.size(); ++m) {
            const double d = y - thetas[m];
            const double w = std::exp(log_kappa[m] - 0.5 * d * d - mx);
            s += w;
            stheta += w * thetas[m];
        }
        const double da = y - theta1;
        h = mx + std::log(s) + 0.5 * da * da;
        hp = stheta / s - theta1;
    }

    double operator()(std::span<const double> log_kappa) const {
        if (log_kappa.size() != thetas.size()) {
            throw std::invalid_argument("mlr_threshold: dimension mismatch");
        }
        bool any = false;
        for (double lk : log_kappa) any = any || (lk > kNegInf);
        if (!any) return kNegInf;  // empty mixture rejects everywhere

        double h, hp;
        double a = thetas.back() - 1.0;  // grid is decreasing; back() is the minimum
        double step = 1.0;
        for (;;) {
            eval(log_kappa, a, h, hp);
            if (h > 0.0) break;
            a -= step;
            step *= 2.0;
        }
        double b = theta1 + 1.0;
        step = 1.0;
        for (;;) {
            eval(log_kappa, b, h, hp);
            if (h < 0.0) break;
            b += step;
            step *= 2.0;
        }

        double y = 0.5 * (a + b);
        for (int it = 0; it < 200; ++it) {
            eval(log_kappa, y, h, hp);
            if (h == 0.0) return y;
            if (h > 0.0) a = y; else b = y;
            if (b - a <= 1e-13 * std::max(1.0, std::fabs(y))) break;
            double next = y - h / hp;  // hp < 0 everywhere
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            y = next;
        }
        return 0.5 * (a + b);
    }
};

}  // namespace

int DiscreteTables::find(double y) const {
    const auto it = std::lower_bound(sorted_atoms.begin(), sorted_atoms.end(), y);
    if (it == sorted_atoms.end() || *it != y) return -1;
    return sorted_to_orig[static_cast<std::size_t>(it - sorted_atoms.begin())];
}

DensityMember gaussian_member(double mean) {
    DensityMember d;
    d.log_pdf = [mean](double y) { return gaussian_log_pdf(y, mean); };
    d.sampler = [mean](RngStream& s) { return mean + s.normal(); };
    return d;
}

TestingProblem gaussian_location_problem(std::int64_t M, double lo, double hi,
                                         double theta1, double alpha) {
    if (M < 2) throw std::invalid_argument("gaussian_location_problem: M >= 2 required");
    if (!(lo < hi)) throw std::invalid_argument("gaussian_location_problem: lo < hi required");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("gaussian_location_problem: alpha must lie in (0,1)");
    }

    TestingProblem p;
    p.alpha = alpha;
    p.sample_space_tag = SampleSpace::Continuous;
    p.null_locations.resize(static_cast<std::size_t>(M));
    const double span = hi - lo;
    for (std::int64_t m = 0; m < M; ++m) {
        p.null_locations[static_cast<std::size_t>(m)] =
            hi - span * static_cast<double>(m) / static_cast<double>(M - 1);
    }
    p.null_locations.back() = lo;
    p.alt_location = theta1;

    p.nulls.reserve(static_cast<std::size_t>(M));
    for (double theta : p.null_locations) {
        p.nulls.push_back(gaussian_member(theta));
    }
    p.alternative = gaussian_member(theta1);

    if (theta1 > hi) {
        ThresholdSolver solver{p.null_locations, theta1};
        p.mlr_threshold = [solver = std::move(solver)](std::span<const double> lk) {
            return solver(lk);
        };
    }
    return p;
}

TestingProblem to_testing_problem(const DiscreteProblem& dp, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("to_testing_problem: alpha must lie in (0,1)");
    }
    const std::size_t K = dp.atoms.size();
    const std::size_t M = dp.null_masses.size();
    if (K == 0) throw std::invalid_argument("discrete problem has no atoms");
    if (M == 0) throw std::invalid_argument("discrete problem has no nulls");
    for (const auto& row : dp.null_masses) {
        if (row.size() != K) throw std::invalid_argument("null mass row length mismatch");
    }
    if (dp.alt_masses.size() != K) {
        throw std::invalid_argument("alternative mass length mismatch");
    }

    auto tables = std::make_shared<DiscreteTables>();
    {
        std::vector<std::pair<double, int>> order(K);
        for (std::size_t k = 0; k < K; ++k) order[k] = {dp.atoms[k], static_cast<int>(k)};
        std::sort(order.begin(), order.end());
        tables->sorted_atoms.resize(K);
        tables->sorted_to_orig.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            tables->sorted_atoms[k] = order[k].first;
            tables->sorted_to_orig[k] = order[k].second;
            if (k > 0 && order[k].first == order[k - 1].first) {
                throw std::invalid_argument("duplicate atom " + format_double(order[k].first));
            }
        }
    }
    tables->log_null_masses.reserve(M);
    tables->null_cum.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        tables->log_null_masses.push_back(log_of_masses(dp.null_masses[m]));
        tables->null_cum.push_back(
            cumulative_normalized(dp.null_masses[m], "null " + std::to_string(m + 1)));
    }
    tables->log_alt_masses = log_of_masses(dp.alt_masses);
    tables->alt_cum = cumulative_normalized(dp.alt_masses, "alternative");

    TestingProblem p;
    p.alpha = alpha;
    p.sample_space_tag = SampleSpace::Discrete;
    p.discrete = std::make_shared<const DiscreteProblem>(dp);
    p.discrete_tables = tables;

    const auto atoms = p.discrete;  // shared by the member closures
    p.nulls.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        DensityMember d;
        d.log_pdf = [tables, m](double y) {
            const int k = tables->find(y);
            return k < 0 ? kNegInf : tables->log_null_masses[m][static_cast<std::size_t>(k)];
        };
        d.sampler = [tables, atoms, m](RngStream& s) {
            return atoms->atoms[pick_from_cum(tables->null_cum[m], s.uniform01())];
        };
        p.nulls.push_back(std::move(d));
    }
    {
        DensityMember d;
        d.log_pdf = [tables](double y) {
            const int k = tables->find(y);
            return k < 0 ? kNegInf : tables->log_alt_masses[static_cast<std::size_t>(k)];
        };
        d.sampler = [tables, atoms](RngStream& s) {
            return atoms->atoms[pick_from_cum(tables->alt_cum, s.uniform01())];
        };
        p.alternative = std::move(d);
    }
    return p;
}

DiscreteProblem load_discrete_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.size() < 2) throw std::runtime_error(path + ": need a header row and atoms");
    const auto& header = rows[0];
    if (header.size() < 3 || header.front() != "atom" || header.back() != "g") {
        throw std::runtime_error(path + ": header must be atom,f_1,...,f_M,g");
    }
    const std::size_t M = header.size() - 2;
    for (std::size_t m = 0; m < M; ++m) {
        if (header[m + 1] != "f_" + std::to_string(m + 1)) {
            throw std::runtime_error(path + ": header must be atom,f_1,...,f_M,g");
        }
    }

    DiscreteProblem dp;
    dp.null_masses.assign(M, {});
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                                     " has wrong field count");
        }
        const std::string ctx = path + " row " + std::to_string(r + 1);
        dp.atoms.push_back(parse_double(row[0], ctx));
        for (std::size_t m = 0; m < M; ++m) {
            dp.null_masses[m].push_back(parse_double(row[m + 1], ctx));
        }
        dp.alt_masses.push_back(parse_double(row.back(), ctx));
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (parse_double(row[c], ctx) < 0.0) {
                throw std::runtime_error(ctx + ": negative mass " + row[c]);
            }
        }
    }
    std::vector<double> sorted = dp.atoms;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::runtime_error(path + ": duplicate atom values");
    }
    return dp;
}

void fill_log_pdfs(const TestingProblem& problem, double y, std::span<double> out) {
    const std::size_t M = problem.nulls.size();
    if (out.size() != M + 1) {
        throw std::invalid_argument("fill_log_pdfs: buffer must hold M + 1 entries");
    }
    if (!problem.null_locations.empty() && problem.alt_location.has_value()) {
        for (std::size_t m = 0; m < M; ++m) {
            out[m] = gaussian_log_pdf(y, problem.null_locations[m]);
        }
        out[M] = gaussian_log_pdf(y, *problem.alt_location);
        return;
    }
    if (problem.discrete_tables) {
        const auto& t = *problem.discrete_tables;
        const int k = t.find(y);
        if (k < 0) {
            for (std::size_t m = 0; m <= M; ++m) out[m] = kNegInf;
            return;
        }
        const auto kk = static_cast<std::size_t>(k);
        for (std::size_t m = 0; m < M; ++m) out[m] = t.log_null_masses[m][kk];
        out[M] = t.log_alt_masses[kk];
        return;
    }
    for (std::size_t m = 0; m < M; ++m) out[m] = problem.nulls[m].log_pdf(y);
    out[M] = problem.alternative.log_pdf(y);
}

double log_mixture_from_logs(std::span<const double> log_kappa,
                             std::span<const double> log_pdfs) {
    const std::size_t M = log_kappa.size();
    if (log_pdfs.size() < M) {
        throw std::invalid_argument("log_mixture_from_logs: dimension mismatch");
    }
    double mx = kNegInf;
    for (std::size_t m = 0; m < M; ++m) {
        const double t = log_kappa[m] + log_pdfs[m];
        if (t > mx) mx = t;
    }
    if (!(mx > kNegInf)) return kNegInf;
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        s += std::exp(log_kappa[m] + log_pdfs[m] - mx);
    }
    return mx + std::log(s);
}

double log_mixture_values(std::span<const double> kappa_values, double y,
                          const TestingProblem& problem) {
    const std::size_t M = problem.nulls.size();
    if (kappa_values.size() != M) {
        throw std::invalid_argument("log_mixture_values: dimension mismatch");
    }
    thread_local std::vector<double> lp, lk;
    lp.resize(M + 1);
    lk.resize(M);
    fill_log_pdfs(problem, y, lp);
    for (std::size_t m = 0; m < M; ++m) lk[m] = std::log(kappa_values[m]);
    return log_mixture_from_logs(lk, std::span<const double>(lp.data(), M));
}

namespace {

void validate_discrete(const DiscreteProblem& dp, std::vector<std::string>& out) {
    const std::size_t K = dp.atoms.size();
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = k + 1; j < K; ++j) {
            if (dp.atoms[k] == dp.atoms[j]) {
                out.push_back("duplicate atom " + format_double(dp.atoms[k]));
            }
        }
    }
    auto check_member = [&out](const std::string& who, const std::vector<double>& masses,
                               const std::vector<double>& atoms) {
        double sum = 0.0;
        for (std::size_t k = 0; k < masses.size(); ++k) {
            if (masses[k] < 0.0) {
                out.push_back(who + " atom " + format_double(atoms[k]) + " negative mass " +
                              format_double(masses[k]));
            }
            sum += masses[k];
        }
        if (std::fabs(sum - 1.0) > 1e-12) {
            out.push_back(who + " mass " + format_double(sum));
        }
    };
    for (std::size_t m = 0; m < dp.null_masses.size(); ++m) {
        check_member("null " + std::to_string(m + 1), dp.null_masses[m], dp.atoms);
    }
    check_member("alternative", dp.alt_masses, dp.atoms);
}

/*
 * Sampler smoke check: empirical CDF of fixed-seed draws against the CDF from
 * trapezoid quadrature of exp(log_pdf) over a range padding the draws. The
 * flag level is deliberately lax (asymptotic 5e-5 KS critical value 2.3) so
 * that problems with hundreds of members do not trip false alarms; genuine
 * sampler/log_pdf mismatches move the statistic far past it.
 */
void validate_continuous_member(const DensityMember& member, const std::string& who,
                                std::uint64_t member_index, std::int64_t smoke_draws,
                                std::vector<std::string>& out) {
    const auto n = static_cast<std::size_t>(smoke_draws);
    std::vector<double> draws(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream s(0, streams::kValidate, member_index, static_cast<std::uint64_t>(i));
        draws[i] = member.sampler(s);
    }
    std::sort(draws.begin(), draws.end());

    const double lo = draws.front() - 2.0;
    const double hi = draws.back() + 2.0;
    const std::size_t nodes = 8001;
    const double h = (hi - lo) / static_cast<double>(nodes - 1);
    std::vector<double> cdf(nodes);
    double prev = std::exp(member.log_pdf(lo));
    double acc = 0.0;
    cdf[0] = 0.0;
    for (std::size_t i = 1; i < nodes; ++i) {
        const double x = lo + h * static_cast<double>(i);
        const double cur = std::exp(member.log_pdf(x));
        acc += 0.5 * h * (prev + cur);
        cdf[i] = acc;
        prev = cur;
    }
    if (std::fabs(acc - 1.0) > 0.01) {
        out.push_back(who + " density mass " + format_double(acc) +
                      " over the sampled range");
        return;
    }

    auto cdf_at = [&](double x) {
        const double pos = (x - lo) / h;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= nodes) return 1.0;
        const double frac = pos - static_cast<double>(i);
        const double v = cdf[i] + frac * (cdf[i + 1] - cdf[i]);
        return std::clamp(v, 0.0, 1.0);
    };

    double d_stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf_at(draws[i]);
        const double up = static_cast<double>(i + 1) / static_cast<double>(n) - f;
        const double dn = f - static_cast<double>(i) / static_cast<double>(n);
        d_stat = std::max({d_stat, up, dn});
    }
    const double crit = 2.3 / std::sqrt(static_cast<double>(n));
    if (d_stat > crit) {
        out.push_back(who + " sampler KS " + format_double(d_stat) + " exceeds " +
                      format_double(crit));
    }
}

}  // namespace

std::vector<std::string> validate(const TestingProblem& problem, std::int64_t smoke_draws) {
    std::vector<std::string> out;
    if (problem.sample_space_tag == SampleSpace::Discrete) {
        if (!problem.discrete) {
            out.push_back("discrete problem without backing masses");
            return out;
        }
        validate_discrete(*problem.discrete, out);
        return out;
    }
    for (std::size_t m = 0; m < problem.nulls.size(); ++m) {
        validate_continuous_member(problem.nulls[m], "null " + std::to_string(m + 1), m,
                                   smoke_draws, out);
    }
    validate_continuous_member(problem.alternative, "alternative", problem.nulls.size(),
                               smoke_draws, out);
    return out;
}

}  // namespace lfd
