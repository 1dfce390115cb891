#include "lfd/smd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lfd {

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();
const double kEuler = 2.7182818284590452353602874713527;

bool guarantee_domain_ok(double alpha, std::int64_t M) {
    return alpha > 0.0 && alpha < 0.5 && static_cast<double>(M) > kEuler / alpha;
}

// Schedule resolution shared by every engine entry point. M = 1 makes the
// ln M factor degenerate, so the formula runs with ln 2 instead and the
// guarantee flag is raised; explicit overrides always win.
Schedule resolve_schedule(double alpha, double epsilon, std::int64_t M,
                          const SmdConfig& config) {
    Schedule s;
    if (config.t_override.has_value() && config.eta_override.has_value()) {
        s.T = *config.t_override;
        s.eta = *config.eta_override;
        s.guarantee_out_of_range = !guarantee_domain_ok(alpha, M);
    } else {
        s = schedule(alpha, epsilon, std::max<std::int64_t>(M, 2));
        if (M < 2) s.guarantee_out_of_range = true;
        if (config.t_override.has_value()) s.T = *config.t_override;
        if (config.eta_override.has_value()) s.eta = *config.eta_override;
    }
    if (s.T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    if (!(s.eta > 0.0)) throw std::invalid_argument("schedule: eta must be positive");
    return s;
}

void check_config(const TestingProblem& problem, const SmdConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
        throw std::invalid_argument("SmdConfig: alpha must lie in (0,1)");
    }
    if (config.alpha != problem.alpha) {
        throw std::invalid_argument("SmdConfig: alpha differs from the problem's alpha");
    }
    if (!(config.epsilon > 0.0)) throw std::invalid_argument("SmdConfig: epsilon must be positive");
    if (config.n_draws < 1) throw std::invalid_argument("SmdConfig: n_draws must be >= 1");
    if (!(config.omega > 0.0)) throw std::invalid_argument("SmdConfig: omega must be positive");
}

std::vector<double> initial_kappa(const TestingProblem& problem, const SmdConfig& config) {
    const auto M = static_cast<std::int64_t>(problem.M());
    if (config.init_kappa.has_value()) {
        const auto& k0 = *config.init_kappa;
        if (k0.size() != problem.M()) {
            throw std::invalid_argument("init_kappa: dimension mismatch");
        }
        if (!in_multiplier_domain(k0, config.alpha)) {
            throw std::invalid_argument("init_kappa: outside the feasible domain");
        }
        return k0;
    }
    return init_multipliers(config.alpha, M).values;
}

/*
 * Monte-Carlo subgradient at the current iterate. Each (epoch, m, n) cell
 * owns the substream (seed, kGradient, epoch, m, n) and contributes one test
 * bit, so the estimate is a pure function of (seed, epoch, iterate) for any
 * execution policy. Discrete problems evaluate the K per-atom decisions once
 * and let cells sample atom indices through the same uniform draw the public
 * samplers consume.
 */
void mc_subgradient(const TestingProblem& problem, std::int64_t n_draws, std::uint64_t seed,
                    std::uint64_t epoch, ExecPolicy policy,
                    std::span<const double> log_kappa, double alpha,
                    std::span<double> g_out) {
    const std::size_t M = problem.M();
    const double n = static_cast<double>(n_draws);

    if (problem.discrete_tables) {
        const auto& tb = *problem.discrete_tables;
        const std::size_t K = tb.log_alt_masses.size();
        std::vector<std::uint8_t> atom_bit(K);
        std::vector<double> lp(M + 1);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t m = 0; m < M; ++m) lp[m] = tb.log_null_masses[m][k];
            lp[M] = tb.log_alt_masses[k];
            atom_bit[k] = np_test_from_logs(log_kappa, lp) ? 1 : 0;
        }
        parallel_for(policy, static_cast<std::int64_t>(M), [&](std::int64_t m) {
            const auto& cum = tb.null_cum[static_cast<std::size_t>(m)];
            std::int64_t count = 0;
            for (std::int64_t i = 0; i < n_draws; ++i) {
                RngStream cell(seed, streams::kGradient, epoch,
                               static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i));
                const double u = cell.uniform01();
                const auto it = std::upper_bound(cum.begin(), cum.end(), u);
                std::size_t k = static_cast<std::size_t>(it - cum.begin());
                if (k >= cum.size()) k = cum.size() - 1;
                count += atom_bit[k];
            }
            g_out[static_cast<std::size_t>(m)] =
                -(static_cast<double>(count) / n - alpha);
        });
        return;
    }

    parallel_for(policy, static_cast<std::int64_t>(M), [&](std::int64_t m) {
        thread_local std::vector<double> lp;
        lp.resize(M + 1);
        std::int64_t count = 0;
        for (std::int64_t i = 0; i < n_draws; ++i) {
            RngStream cell(seed, streams::kGradient, epoch, static_cast<std::uint64_t>(m),
                           static_cast<std::uint64_t>(i));
            const double y = problem.nulls[static_cast<std::size_t>(m)].sampler(cell);
            fill_log_pdfs(problem, y, lp);
            count += np_test_from_logs(log_kappa, lp) ? 1 : 0;
        }
        g_out[static_cast<std::size_t>(m)] = -(static_cast<double>(count) / n - alpha);
    });
}

SmdOutput run_engine(const TestingProblem& problem, const SmdConfig& config,
                     const GradientFn& gradient) {
    check_config(problem, config);
    const std::size_t M = problem.M();
    if (M == 0) throw std::invalid_argument("run: problem has no nulls");
    const Schedule sched = resolve_schedule(config.alpha, config.epsilon,
                                            static_cast<std::int64_t>(M), config);
    const std::int64_t T = sched.T;
    const double cap = 1.0 / config.alpha + kDomainSlack;

    if (config.record_thresholds && !problem.mlr_threshold) {
        throw std::invalid_argument(
            "record_thresholds requires a problem with single-threshold structure");
    }

    // Grid log densities are constant across epochs; precompute rows.
    const std::size_t G = config.eval_grid.size();
    std::vector<std::vector<double>> lp_grid(G);
    for (std::size_t i = 0; i < G; ++i) {
        lp_grid[i].resize(M + 1);
        fill_log_pdfs(problem, config.eval_grid[i], lp_grid[i]);
    }

    SmdState state;
    state.seed = config.seed;
    const std::vector<double> k0 = initial_kappa(problem, config);
    state.log_kappa.resize(M);
    for (std::size_t m = 0; m < M; ++m) state.log_kappa[m] = std::log(k0[m]);
    state.kappa_sum.assign(M, 0.0);
    state.grid_reject_sum.assign(G, 0);

    SmdOutput out;
    out.schedule = sched;
    if (config.record_trace) {
        out.trace.emplace();
        out.trace->reserve(static_cast<std::size_t>(T));
        out.inner_products.emplace();
        out.inner_products->reserve(static_cast<std::size_t>(T));
        if (G > 0) out.grid_bits.emplace();
    }
    if (config.record_thresholds) {
        out.thresholds.emplace();
        out.thresholds->reserve(static_cast<std::size_t>(T));
    }

    std::vector<double> lin(M), loglin(M), g(M);
    std::vector<std::uint8_t> grid_row(G);

    for (std::int64_t t = 1; t <= T; ++t) {
        state.t = t;
        double norm = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            lin[m] = std::exp(state.log_kappa[m]);
            loglin[m] = std::log(lin[m]);
            norm += lin[m];
            state.kappa_sum[m] += lin[m];
        }
        if (!(norm <= cap)) {
            throw std::logic_error("mirror descent iterate left the feasible domain");
        }
        if (config.record_trace) out.trace->push_back(lin);
        if (config.record_thresholds) {
            out.thresholds->push_back(problem.mlr_threshold(loglin));
        }

        if (G > 0) {
            parallel_for(config.policy, static_cast<std::int64_t>(G), [&](std::int64_t i) {
                const auto ii = static_cast<std::size_t>(i);
                const std::uint8_t bit = np_test_from_logs(loglin, lp_grid[ii]) ? 1 : 0;
                state.grid_reject_sum[ii] += bit;
                grid_row[ii] = bit;
            });
            if (out.grid_bits.has_value()) out.grid_bits->push_back(grid_row);
        }

        gradient(t, loglin, lin, g);

        double ip = 0.0;
        for (std::size_t m = 0; m < M; ++m) ip += g[m] * lin[m];
        state.excess_sum += ip;
        if (config.record_trace) out.inner_products->push_back(ip);

        if (t < T) {
            detail::entropic_update_logs(state.log_kappa, g, sched.eta, config.alpha);
        }
    }

    std::vector<double> kbar(M);
    for (std::size_t m = 0; m < M; ++m) {
        kbar[m] = state.kappa_sum[m] / static_cast<double>(T);
    }
    out.kappa_bar = make_multipliers(std::move(kbar), config.alpha);
    out.lambda = normalize(out.kappa_bar);
    out.excess_type1_term = -state.excess_sum / static_cast<double>(T);
    out.avg_test_on_grid.resize(G);
    for (std::size_t i = 0; i < G; ++i) {
        out.avg_test_on_grid[i] = {config.eval_grid[i],
                                   static_cast<double>(state.grid_reject_sum[i]) /
                                       static_cast<double>(T)};
    }
    return out;
}

}  // namespace

Schedule schedule(double alpha, double epsilon, std::int64_t M) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("schedule: alpha must lie in (0,1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("schedule: epsilon must be positive");
    if (M < 2) throw std::invalid_argument("schedule: M >= 2 required");
    const double om = 1.0 - alpha;
    const double raw = 4.0 * om * om / (alpha * alpha * epsilon * epsilon) *
                       std::log(static_cast<double>(M));
    Schedule s;
    s.T = static_cast<std::int64_t>(std::ceil(raw));
    s.eta = alpha * epsilon / (2.0 * om * om);
    s.guarantee_out_of_range = !guarantee_domain_ok(alpha, M);
    return s;
}

Multipliers init_multipliers(double alpha, std::int64_t M) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("init_multipliers: alpha must lie in (0,1)");
    }
    if (M < 1) throw std::invalid_argument("init_multipliers: M >= 1 required");
    const double value = static_cast<double>(M) < kEuler / alpha
                             ? 1.0 / kEuler
                             : 1.0 / (alpha * static_cast<double>(M));
    return make_multipliers(std::vector<double>(static_cast<std::size_t>(M), value), alpha);
}

std::vector<double> estimate_subgradient(const Multipliers& kappa,
                                         const TestingProblem& problem,
                                         std::int64_t n_draws, std::uint64_t seed,
                                         std::uint64_t epoch, ExecPolicy policy) {
    const std::size_t M = problem.M();
    if (kappa.values.size() != M) {
        throw std::invalid_argument("estimate_subgradient: dimension mismatch");
    }
    if (n_draws < 1) throw std::invalid_argument("estimate_subgradient: n_draws >= 1");
    if (!in_multiplier_domain(kappa.values, kappa.alpha)) {
        throw std::invalid_argument("estimate_subgradient: kappa outside the domain");
    }
    std::vector<double> loglin(M), g(M);
    for (std::size_t m = 0; m < M; ++m) loglin[m] = std::log(kappa.values[m]);
    mc_subgradient(problem, n_draws, seed, epoch, policy, loglin, kappa.alpha, g);
    return g;
}

namespace detail {

void entropic_update_logs(std::span<double> log_kappa, std::span<const double> g_hat,
                          double eta, double alpha) {
    const std::size_t M = log_kappa.size();
    if (g_hat.size() != M) {
        throw std::invalid_argument("entropic_update: dimension mismatch");
    }
    for (std::size_t m = 0; m < M; ++m) {
        log_kappa[m] -= eta * g_hat[m];
    }
    double mx = kNegInf;
    for (double v : log_kappa) {
        if (v > mx) mx = v;
    }
    if (!(mx > kNegInf)) return;  // zero vector is a fixed point
    double s = 0.0;
    for (double v : log_kappa) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    const double ln_c = std::min(0.0, -(std::log(alpha) + lse));
    if (ln_c < 0.0) {
        for (std::size_t m = 0; m < M; ++m) log_kappa[m] += ln_c;
    }
}

}  // namespace detail

Multipliers entropic_update(const Multipliers& kappa_t, std::span<const double> g_hat,
                            double eta) {
    const std::size_t M = kappa_t.values.size();
    std::vector<double> logk(M);
    for (std::size_t m = 0; m < M; ++m) logk[m] = std::log(kappa_t.values[m]);
    detail::entropic_update_logs(logk, g_hat, eta, kappa_t.alpha);
    std::vector<double> values(M);
    for (std::size_t m = 0; m < M; ++m) values[m] = std::exp(logk[m]);
    return make_multipliers(std::move(values), kappa_t.alpha);
}

SmdOutput run(const TestingProblem& problem, const SmdConfig& config) {
    return run_engine(problem, config,
                      [&problem, &config](std::int64_t epoch, std::span<const double> log_kappa,
                                          std::span<const double>, std::span<double> g_out) {
                          mc_subgradient(problem, config.n_draws, config.seed,
                                         static_cast<std::uint64_t>(epoch), config.policy,
                                         log_kappa, config.alpha, g_out);
                      });
}

SmdOutput run_with_gradient(const TestingProblem& problem, const SmdConfig& config,
                            const GradientFn& gradient) {
    return run_engine(problem, config, gradient);
}

int run_randomized_epoch(const TestingProblem& problem, const SmdConfig& config, double y,
                         RngStream& tstar_rng, std::int64_t* t_star_out) {
    check_config(problem, config);
    const std::size_t M = problem.M();
    const Schedule sched = resolve_schedule(config.alpha, config.epsilon,
                                            static_cast<std::int64_t>(M), config);
    const std::int64_t t_star =
        1 + static_cast<std::int64_t>(tstar_rng.uniform_below(
                static_cast<std::uint64_t>(sched.T)));
    if (t_star_out != nullptr) *t_star_out = t_star;

    const std::vector<double> k0 = initial_kappa(problem, config);
    std::vector<double> log_kappa(M), lin(M), loglin(M), g(M), lp(M + 1);
    for (std::size_t m = 0; m < M; ++m) log_kappa[m] = std::log(k0[m]);

    for (std::int64_t t = 1; t <= t_star; ++t) {
        for (std::size_t m = 0; m < M; ++m) {
            lin[m] = std::exp(log_kappa[m]);
            loglin[m] = std::log(lin[m]);
        }
        if (t == t_star) {
            fill_log_pdfs(problem, y, lp);
            return np_test_from_logs(loglin, lp) ? 1 : 0;
        }
        mc_subgradient(problem, config.n_draws, config.seed,
                       static_cast<std::uint64_t>(t), config.policy, loglin, config.alpha, g);
        detail::entropic_update_logs(log_kappa, g, sched.eta, config.alpha);
    }
    return 0;  // unreachable; t_star >= 1
}

ExtendedOutput run_extended(const TestingProblem& problem, const AlternativeFamily& family,
                            const SmdConfig& config,
                            const std::optional<std::vector<double>>& mu_init) {
    check_config(problem, config);
    const std::size_t M = problem.M();
    const std::size_t I = family.members.size();
    if (I == 0 || family.weights.size() != I) {
        throw std::invalid_argument("run_extended: bad alternative family");
    }
    const Schedule sched = resolve_schedule(config.alpha, config.epsilon,
                                            static_cast<std::int64_t>(M), config);
    const std::int64_t T = sched.T;
    const double cap = 1.0 / config.alpha + kDomainSlack;
    const double n = static_cast<double>(config.n_draws);

    const std::vector<double> k0 = initial_kappa(problem, config);
    std::vector<double> log_kappa(M), log_mu(I, kNegInf);
    for (std::size_t m = 0; m < M; ++m) log_kappa[m] = std::log(k0[m]);
    if (mu_init.has_value()) {
        if (mu_init->size() != I) throw std::invalid_argument("mu_init: dimension mismatch");
        for (std::size_t i = 0; i < I; ++i) {
            if (!((*mu_init)[i] >= 0.0)) {
                throw std::invalid_argument("mu_init: coordinates must be >= 0");
            }
            log_mu[i] = std::log((*mu_init)[i]);
        }
    }

    std::vector<double> lin_k(M), loglin_k(M), lin_m(I), loglin_m(I);
    std::vector<double> gk(M), gm(I);
    std::vector<double> kappa_sum(M, 0.0), mu_sum(I, 0.0);

    // Extended decision at y under the current iterate: reject iff
    // g(y) + sum_i mu_i g_i(y) > sum_m kappa_m f_m(y).
    auto extended_bit = [&](double y, std::vector<double>& lp) {
        fill_log_pdfs(problem, y, lp);
        const double log_mix =
            log_mixture_from_logs(loglin_k, std::span<const double>(lp.data(), M));
        double mx = lp[M];
        thread_local std::vector<double> terms;
        terms.resize(I);
        for (std::size_t i = 0; i < I; ++i) {
            terms[i] = loglin_m[i] + family.members[i].log_pdf(y);
            if (terms[i] > mx) mx = terms[i];
        }
        if (!(mx > kNegInf)) return 0;
        double s = std::exp(lp[M] - mx);
        for (std::size_t i = 0; i < I; ++i) s += std::exp(terms[i] - mx);
        return (mx + std::log(s)) > log_mix ? 1 : 0;
    };

    for (std::int64_t t = 1; t <= T; ++t) {
        double norm = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            lin_k[m] = std::exp(log_kappa[m]);
            loglin_k[m] = std::log(lin_k[m]);
            norm += lin_k[m];
            kappa_sum[m] += lin_k[m];
        }
        for (std::size_t i = 0; i < I; ++i) {
            lin_m[i] = std::exp(log_mu[i]);
            loglin_m[i] = std::log(lin_m[i]);
            norm += lin_m[i];
            mu_sum[i] += lin_m[i];
        }
        if (!(norm <= cap)) {
            throw std::logic_error("extended iterate left the joint feasible domain");
        }

        parallel_for(config.policy, static_cast<std::int64_t>(M), [&](std::int64_t m) {
            thread_local std::vector<double> lp;
            lp.resize(M + 1);
            std::int64_t count = 0;
            for (std::int64_t d = 0; d < config.n_draws; ++d) {
                RngStream cell(config.seed, streams::kGradient, static_cast<std::uint64_t>(t),
                               static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(d));
                const double y = problem.nulls[static_cast<std::size_t>(m)].sampler(cell);
                count += extended_bit(y, lp);
            }
            gk[static_cast<std::size_t>(m)] = -(static_cast<double>(count) / n - config.alpha);
        });
        parallel_for(config.policy, static_cast<std::int64_t>(I), [&](std::int64_t i) {
            thread_local std::vector<double> lp;
            lp.resize(M + 1);
            std::int64_t count = 0;
            for (std::int64_t d = 0; d < config.n_draws; ++d) {
                RngStream cell(config.seed, streams::kGradient, static_cast<std::uint64_t>(t),
                               static_cast<std::uint64_t>(M + static_cast<std::size_t>(i)),
                               static_cast<std::uint64_t>(d));
                const double y = family.members[static_cast<std::size_t>(i)].sampler(cell);
                count += extended_bit(y, lp);
            }
            gm[static_cast<std::size_t>(i)] = -(config.alpha - static_cast<double>(count) / n);
        });

        if (t < T) {
            // Joint multiplicative step with one shared l1-cap rescale.
            for (std::size_t m = 0; m < M; ++m) log_kappa[m] -= sched.eta * gk[m];
            for (std::size_t i = 0; i < I; ++i) log_mu[i] -= sched.eta * gm[i];
            double mx = kNegInf;
            for (double v : log_kappa) mx = std::max(mx, v);
            for (double v : log_mu) mx = std::max(mx, v);
            if (mx > kNegInf) {
                double s = 0.0;
                for (double v : log_kappa) s += std::exp(v - mx);
                for (double v : log_mu) s += std::exp(v - mx);
                const double lse = mx + std::log(s);
                const double ln_c = std::min(0.0, -(std::log(config.alpha) + lse));
                if (ln_c < 0.0) {
                    for (std::size_t m = 0; m < M; ++m) log_kappa[m] += ln_c;
                    for (std::size_t i = 0; i < I; ++i) log_mu[i] += ln_c;
                }
            }
        }
    }

    ExtendedOutput out;
    out.schedule = sched;
    out.averages.kappa.resize(M);
    out.averages.mu.resize(I);
    for (std::size_t m = 0; m < M; ++m) {
        out.averages.kappa[m] = kappa_sum[m] / static_cast<double>(T);
    }
    for (std::size_t i = 0; i < I; ++i) {
        out.averages.mu[i] = mu_sum[i] / static_cast<double>(T);
    }
    out.averages.alt_weights = family.weights;
    out.no_finite_sample_guarantee = true;
    return out;
}

}  // namespace lfd
