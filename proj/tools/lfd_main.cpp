// Command-line front end: builds a testing problem from a preset or a
// discrete CSV, runs the solver / oracles / diagnostics, and writes CSV
// artifacts. All outputs are fully determined by the resolved configuration,
// which is persisted next to them.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lfd/csvio.hpp"
#include "lfd/eval.hpp"
#include "lfd/model.hpp"
#include "lfd/nptest.hpp"
#include "lfd/oracle.hpp"
#include "lfd/rng.hpp"
#include "lfd/smd.hpp"

namespace {

struct RunConfig {
    std::string preset = "gaussian";
    std::string discrete_csv;  // nonempty selects the discrete path
    std::int64_t M = 200;
    double lo = -5.0;
    double hi = 0.0;
    double theta1 = 2.0;
    double alpha = 0.1;
    double epsilon = 0.1;
    std::int64_t n_draws = 1;
    double omega = 1.0;
    std::uint64_t seed = 1;
    std::int64_t eval_draws = 100000;
    double eval_grid_lo = -6.0;
    double eval_grid_hi = 6.0;
    std::int64_t eval_grid_count = 401;
    std::string output_dir = "out";
    bool record_trace = false;
    bool run_oracle = false;
    std::vector<double> randomized_epoch_y;
    std::optional<std::int64_t> t_override;
    std::optional<double> eta_override;
    std::int64_t runs = 100;                // concentration repetitions
    std::vector<std::int64_t> n_list;       // timing draw counts
};

std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += lfd::format_double(v[i]);
    }
    return s;
}

std::string join_ints(const std::vector<std::int64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

// Plain key = value lines; '#' starts a comment; keys mirror RunConfig
// field names. CLI flags given explicitly win over file values.
void apply_config_file(const std::string& path, RunConfig& cfg,
                       const std::function<bool(const std::string&)>& cli_set) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        if (eq == std::string::npos) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key = value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            const auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (cli_set(key)) continue;

        if (key == "preset") cfg.preset = value;
        else if (key == "discrete_csv") cfg.discrete_csv = value;
        else if (key == "M") cfg.M = std::stoll(value);
        else if (key == "lo") cfg.lo = lfd::parse_double(value);
        else if (key == "hi") cfg.hi = lfd::parse_double(value);
        else if (key == "theta1") cfg.theta1 = lfd::parse_double(value);
        else if (key == "alpha") cfg.alpha = lfd::parse_double(value);
        else if (key == "epsilon") cfg.epsilon = lfd::parse_double(value);
        else if (key == "n_draws") cfg.n_draws = std::stoll(value);
        else if (key == "omega") cfg.omega = lfd::parse_double(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "eval_draws") cfg.eval_draws = std::stoll(value);
        else if (key == "eval_grid_lo") cfg.eval_grid_lo = lfd::parse_double(value);
        else if (key == "eval_grid_hi") cfg.eval_grid_hi = lfd::parse_double(value);
        else if (key == "eval_grid_count") cfg.eval_grid_count = std::stoll(value);
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "record_trace") cfg.record_trace = value == "true" || value == "1";
        else if (key == "run_oracle") cfg.run_oracle = value == "true" || value == "1";
        else if (key == "randomized_epoch_y") {
            cfg.randomized_epoch_y.clear();
            for (const auto& p : split_list(value)) {
                cfg.randomized_epoch_y.push_back(lfd::parse_double(p));
            }
        } else if (key == "t_override") {
            if (!value.empty()) cfg.t_override = std::stoll(value);
        } else if (key == "eta_override") {
            if (!value.empty()) cfg.eta_override = lfd::parse_double(value);
        } else if (key == "runs") cfg.runs = std::stoll(value);
        else if (key == "n_list") {
            cfg.n_list.clear();
            for (const auto& p : split_list(value)) cfg.n_list.push_back(std::stoll(p));
        } else {
            throw std::runtime_error(path + ": unknown config key '" + key + "'");
        }
    }
}

void write_resolved_config(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"M", std::to_string(cfg.M)},
        {"alpha", lfd::format_double(cfg.alpha)},
        {"discrete_csv", cfg.discrete_csv},
        {"epsilon", lfd::format_double(cfg.epsilon)},
        {"eta_override",
         cfg.eta_override ? lfd::format_double(*cfg.eta_override) : std::string()},
        {"eval_draws", std::to_string(cfg.eval_draws)},
        {"eval_grid_count", std::to_string(cfg.eval_grid_count)},
        {"eval_grid_hi", lfd::format_double(cfg.eval_grid_hi)},
        {"eval_grid_lo", lfd::format_double(cfg.eval_grid_lo)},
        {"hi", lfd::format_double(cfg.hi)},
        {"lo", lfd::format_double(cfg.lo)},
        {"n_draws", std::to_string(cfg.n_draws)},
        {"n_list", join_ints(cfg.n_list)},
        {"omega", lfd::format_double(cfg.omega)},
        {"output_dir", cfg.output_dir},
        {"preset", cfg.preset},
        {"randomized_epoch_y", join_doubles(cfg.randomized_epoch_y)},
        {"record_trace", cfg.record_trace ? "true" : "false"},
        {"run_oracle", cfg.run_oracle ? "true" : "false"},
        {"runs", std::to_string(cfg.runs)},
        {"seed", std::to_string(cfg.seed)},
        {"t_override", cfg.t_override ? std::to_string(*cfg.t_override) : std::string()},
        {"theta1", lfd::format_double(cfg.theta1)},
    };
    std::sort(kv.begin(), kv.end());
    std::vector<std::string> lines;
    lines.reserve(kv.size());
    for (const auto& [k, v] : kv) lines.push_back(k + "=" + v);
    lfd::write_text_file(cfg.output_dir + "/resolved_config", lines);
}

struct BuiltProblem {
    lfd::TestingProblem problem;
    std::shared_ptr<const lfd::DiscreteProblem> dp;  // null for continuous
};

BuiltProblem build_problem(const RunConfig& cfg) {
    BuiltProblem b;
    if (!cfg.discrete_csv.empty()) {
        const lfd::DiscreteProblem dp = lfd::load_discrete_csv(cfg.discrete_csv);
        b.problem = lfd::to_testing_problem(dp, cfg.alpha);
        b.dp = b.problem.discrete;
        return b;
    }
    if (cfg.preset != "gaussian") {
        throw std::invalid_argument("unknown preset '" + cfg.preset + "'");
    }
    b.problem = lfd::gaussian_location_problem(cfg.M, cfg.lo, cfg.hi, cfg.theta1, cfg.alpha);
    return b;
}

lfd::SmdConfig to_smd_config(const RunConfig& cfg) {
    lfd::SmdConfig sc;
    sc.alpha = cfg.alpha;
    sc.epsilon = cfg.epsilon;
    sc.n_draws = cfg.n_draws;
    sc.omega = cfg.omega;
    sc.seed = cfg.seed;
    sc.t_override = cfg.t_override;
    sc.eta_override = cfg.eta_override;
    sc.record_trace = cfg.record_trace;
    return sc;
}

const char* method_name(lfd::OracleMethod m) {
    switch (m) {
        case lfd::OracleMethod::AnalyticGaussian: return "analytic_gaussian";
        case lfd::OracleMethod::SortM1: return "sort_m1";
        case lfd::OracleMethod::GridPlusMD: return "grid_plus_md";
        case lfd::OracleMethod::DeterministicMd: return "deterministic_md";
    }
    return "unknown";
}

lfd::OracleSolution solve_oracle(const RunConfig& cfg, const BuiltProblem& b) {
    if (!b.dp) return lfd::gaussian_oracle(cfg.theta1, cfg.alpha);
    const std::size_t M = b.dp->null_masses.size();
    if (M == 1) return lfd::np_oracle_m1(*b.dp, cfg.alpha);
    if (M > 3) throw std::invalid_argument("discrete oracle: M <= 3 required");
    const std::int64_t grid_pts = M == 2 ? 801 : 101;
    return lfd::dual_grid_oracle(*b.dp, cfg.alpha, grid_pts);
}

void write_oracle_csv(const RunConfig& cfg, const lfd::OracleSolution& sol) {
    std::vector<std::string> lines = {"v_bar,method,certificate_gap"};
    lines.push_back(lfd::format_double(sol.v_bar) + "," + method_name(sol.method_tag) +
                    "," +
                    (sol.certificate_gap ? lfd::format_double(*sol.certificate_gap)
                                         : std::string()));
    lfd::write_text_file(cfg.output_dir + "/oracle.csv", lines);
}

int cmd_run(const RunConfig& cfg) {
    const BuiltProblem b = build_problem(cfg);
    const std::size_t M = b.problem.M();

    lfd::SmdConfig sc = to_smd_config(cfg);
    if (b.dp) {
        sc.eval_grid = b.dp->atoms;  // exact averaged-test values per atom
    } else if (cfg.eval_grid_count > 0) {
        sc.eval_grid.reserve(static_cast<std::size_t>(cfg.eval_grid_count));
        for (std::int64_t i = 0; i < cfg.eval_grid_count; ++i) {
            const double frac = cfg.eval_grid_count == 1
                                    ? 0.0
                                    : static_cast<double>(i) /
                                          static_cast<double>(cfg.eval_grid_count - 1);
            sc.eval_grid.push_back(cfg.eval_grid_lo +
                                   (cfg.eval_grid_hi - cfg.eval_grid_lo) * frac);
        }
    }
    sc.record_thresholds = !b.dp && static_cast<bool>(b.problem.mlr_threshold);

    const lfd::SmdOutput out = lfd::run(b.problem, sc);

    std::filesystem::create_directories(cfg.output_dir);
    lfd::write_text_file(
        cfg.output_dir + "/schedule.txt",
        {"T=" + std::to_string(out.schedule.T), "eta=" + lfd::format_double(out.schedule.eta),
         std::string("guarantee_out_of_range=") +
             (out.schedule.guarantee_out_of_range ? "true" : "false")});

    {
        std::vector<std::string> lines = {"index,theta_or_atom,weight"};
        for (std::size_t m = 0; m < M; ++m) {
            const double label = b.dp ? static_cast<double>(m + 1)
                                      : b.problem.null_locations[m];
            lines.push_back(std::to_string(m + 1) + "," + lfd::format_double(label) + "," +
                            lfd::format_double(out.lambda.weights[m]));
        }
        lfd::write_text_file(cfg.output_dir + "/lambda.csv", lines);
    }

    {
        std::vector<std::string> lines = {"y,avg_phi,np_kappa_bar"};
        for (const auto& [y, phi] : out.avg_test_on_grid) {
            const int bit = lfd::np_test(out.kappa_bar, y, b.problem) ? 1 : 0;
            lines.push_back(lfd::format_double(y) + "," + lfd::format_double(phi) + "," +
                            std::to_string(bit));
        }
        lfd::write_text_file(cfg.output_dir + "/avg_test.csv", lines);
    }

    std::optional<lfd::OracleSolution> oracle;
    if (cfg.run_oracle) {
        oracle = solve_oracle(cfg, b);
        write_oracle_csv(cfg, *oracle);
    }

    {
        lfd::EvalBackend backend;
        if (b.dp) {
            backend.kind = lfd::EvalBackend::Kind::Exact;
        } else {
            backend.draws = cfg.eval_draws;
            backend.seed = cfg.seed;
        }
        const lfd::DualDiagnostics dd = lfd::dual_objective(
            out.kappa_bar, b.problem, backend,
            oracle ? std::optional<double>(oracle->v_bar) : std::nullopt);

        std::vector<std::string> lines = {"metric,null_index,estimate,std_error,draws"};
        const std::string f_draws = std::to_string(dd.evaluation.draws_used);
        lines.push_back("f_kappa_bar,," + lfd::format_double(dd.f_value) + "," +
                        lfd::format_double(dd.f_std_error) + "," + f_draws);
        lines.push_back("excess_type1,," + lfd::format_double(out.excess_type1_term) +
                        ",0,0");
        if (oracle) {
            lines.push_back("v_bar_oracle,," + lfd::format_double(oracle->v_bar) + ",0,0");
            lines.push_back("f_gap,," + lfd::format_double(*dd.gap) + "," +
                            lfd::format_double(dd.f_std_error) + "," + f_draws);
        }

        std::optional<lfd::TestEvaluation> avg_ev;
        if (b.dp) {
            // Averaged-test values are exact per atom; integrate them exactly.
            const auto& grid = out.avg_test_on_grid;
            const lfd::TestFn avg_fn = [&grid](double y) {
                for (const auto& [atom, phi] : grid) {
                    if (atom == y) return phi;
                }
                throw std::logic_error("averaged test queried off the atom grid");
            };
            avg_ev = lfd::exact_size_power(avg_fn, *b.dp);
        } else if (out.thresholds) {
            const lfd::AveragedThresholdTest att(*out.thresholds);
            avg_ev = lfd::mc_size_power([&att](double y) { return att(y); }, b.problem,
                                        cfg.eval_draws, cfg.seed);
        } else {
            std::fprintf(stderr,
                         "note: averaged-test size/power skipped (no single-threshold "
                         "structure available)\n");
        }
        if (avg_ev) {
            for (std::size_t m = 0; m < M; ++m) {
                lines.push_back("avg_test_size," + std::to_string(m + 1) + "," +
                                lfd::format_double(avg_ev->size_per_null[m]) + "," +
                                lfd::format_double(avg_ev->std_errors[m]) + "," +
                                std::to_string(avg_ev->draws_used));
            }
            lines.push_back("avg_test_power,," + lfd::format_double(avg_ev->power) + "," +
                            lfd::format_double(avg_ev->std_errors[M]) + "," +
                            std::to_string(avg_ev->draws_used));
        }
        lfd::write_text_file(cfg.output_dir + "/diagnostics.csv", lines);
    }

    if (!cfg.randomized_epoch_y.empty()) {
        lfd::RngStream pick(cfg.seed, lfd::streams::kEpochPick);
        std::vector<std::string> lines = {"y,t_star,reject"};
        for (double y : cfg.randomized_epoch_y) {
            std::int64_t t_star = 0;
            const int bit = lfd::run_randomized_epoch(b.problem, sc, y, pick, &t_star);
            lines.push_back(lfd::format_double(y) + "," + std::to_string(t_star) + "," +
                            std::to_string(bit));
        }
        lfd::write_text_file(cfg.output_dir + "/randomized_epoch.csv", lines);
    }

    if (cfg.record_trace && out.trace) {
        std::vector<std::string> lines = {"epoch,m,kappa"};
        for (std::size_t t = 0; t < out.trace->size(); ++t) {
            for (std::size_t m = 0; m < M; ++m) {
                lines.push_back(std::to_string(t + 1) + "," + std::to_string(m + 1) + "," +
                                lfd::format_double((*out.trace)[t][m]));
            }
        }
        lfd::write_text_file(cfg.output_dir + "/trace.csv", lines);
    }

    write_resolved_config(cfg);
    return 0;
}

int cmd_oracle(const RunConfig& cfg) {
    const BuiltProblem b = build_problem(cfg);
    const lfd::OracleSolution sol = solve_oracle(cfg, b);
    std::filesystem::create_directories(cfg.output_dir);
    write_oracle_csv(cfg, sol);
    write_resolved_config(cfg);
    std::printf("v_bar=%s method=%s\n", lfd::format_double(sol.v_bar).c_str(),
                method_name(sol.method_tag));
    return 0;
}

int cmd_concentration(const RunConfig& cfg) {
    if (cfg.discrete_csv.empty()) {
        throw std::invalid_argument("concentration requires --discrete <csv>");
    }
    const BuiltProblem b = build_problem(cfg);
    const lfd::ConcentrationReport report = lfd::concentration_harness(
        *b.dp, cfg.alpha, cfg.epsilon, cfg.n_draws, cfg.omega, cfg.runs, cfg.seed);

    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::string> lines = {"run,seed,f_value,gap,failed"};
    for (const auto& row : report.rows) {
        lines.push_back(std::to_string(row.run) + "," + std::to_string(row.seed) + "," +
                        lfd::format_double(row.f_value) + "," +
                        lfd::format_double(row.gap) + "," + (row.failed ? "1" : "0"));
    }
    lfd::write_text_file(cfg.output_dir + "/concentration.csv", lines);
    lfd::write_text_file(
        cfg.output_dir + "/concentration_summary.csv",
        {"runs,failure_count,failure_rate,bound,v_bar,inflated_epsilon,T,eta",
         std::to_string(report.rows.size()) + "," + std::to_string(report.failure_count) +
             "," + lfd::format_double(report.failure_rate) + "," +
             lfd::format_double(report.bound) + "," + lfd::format_double(report.v_bar) +
             "," + lfd::format_double(report.inflated_epsilon) + "," +
             std::to_string(report.schedule_used.T) + "," +
             lfd::format_double(report.schedule_used.eta)});
    write_resolved_config(cfg);
    std::printf("failures %lld/%lld (bound %s)\n",
                static_cast<long long>(report.failure_count),
                static_cast<long long>(cfg.runs), lfd::format_double(report.bound).c_str());
    return 0;
}

int cmd_timing(const RunConfig& cfg) {
    if (cfg.n_list.empty()) {
        throw std::invalid_argument("timing requires a nonempty --N-list");
    }
    const BuiltProblem b = build_problem(cfg);
    std::vector<std::string> lines = {"N,seconds"};
    for (const std::int64_t n : cfg.n_list) {
        if (n < 1) throw std::invalid_argument("timing: draw counts must be >= 1");
        lfd::SmdConfig sc = to_smd_config(cfg);
        sc.n_draws = n;
        const auto t0 = std::chrono::steady_clock::now();
        const lfd::SmdOutput out = lfd::run(b.problem, sc);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        (void)out;
        lines.push_back(std::to_string(n) + "," + lfd::format_double(secs));
        std::printf("N=%lld: %.3f s\n", static_cast<long long>(n), secs);
    }
    std::filesystem::create_directories(cfg.output_dir);
    lfd::write_text_file(cfg.output_dir + "/timing.csv", lines);
    write_resolved_config(cfg);
    return 0;
}

int cmd_validate(const RunConfig& cfg) {
    const BuiltProblem b = build_problem(cfg);
    const std::vector<std::string> diags = lfd::validate(b.problem);
    for (const auto& d : diags) std::printf("%s\n", d.c_str());
    if (diags.empty()) {
        std::printf("ok\n");
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"least-favorable-distribution solver"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file");
        sub->add_option("--preset", cfg.preset, "problem preset (gaussian)");
        sub->add_option("--discrete", cfg.discrete_csv, "discrete problem CSV");
        sub->add_option("--M", cfg.M, "number of nulls (gaussian preset)");
        sub->add_option("--lo", cfg.lo, "lowest null mean");
        sub->add_option("--hi", cfg.hi, "highest null mean");
        sub->add_option("--theta1", cfg.theta1, "alternative mean");
        sub->add_option("--alpha", cfg.alpha, "size level in (0,1)");
        sub->add_option("--epsilon", cfg.epsilon, "target dual gap");
        sub->add_option("--N", cfg.n_draws, "draws per null per epoch");
        sub->add_option("--omega", cfg.omega, "confidence parameter");
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--eval-draws", cfg.eval_draws, "Monte-Carlo evaluation draws");
        sub->add_option("--grid-lo", cfg.eval_grid_lo, "evaluation grid start");
        sub->add_option("--grid-hi", cfg.eval_grid_hi, "evaluation grid end");
        sub->add_option("--grid-count", cfg.eval_grid_count, "evaluation grid points");
        sub->add_option("--T", cfg.t_override, "override epoch count");
        sub->add_option("--eta", cfg.eta_override, "override step size");
        sub->add_flag("--trace", cfg.record_trace, "record per-epoch iterates");
        sub->add_flag("--with-oracle", cfg.run_oracle, "also compute the oracle value");
        sub->add_option("--randomized-y", cfg.randomized_epoch_y,
                        "sample points for randomized-epoch decisions")
            ->delimiter(',');
        sub->add_option("--out", cfg.output_dir, "output directory");
        sub->add_option("--runs", cfg.runs, "concentration repetitions");
        sub->add_option("--N-list", cfg.n_list, "timing draw counts")->delimiter(',');
        return sub;
    };

    CLI::App* run_cmd = add_common(app.add_subcommand("run", "solve and write artifacts"));
    CLI::App* oracle_cmd = add_common(app.add_subcommand("oracle", "ground-truth value"));
    CLI::App* conc_cmd =
        add_common(app.add_subcommand("concentration", "repeated-run failure rates"));
    CLI::App* timing_cmd = add_common(app.add_subcommand("timing", "wall-clock per N"));
    CLI::App* validate_cmd =
        add_common(app.add_subcommand("validate", "check problem inputs"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        CLI::App* active = run_cmd->parsed()        ? run_cmd
                           : oracle_cmd->parsed()   ? oracle_cmd
                           : conc_cmd->parsed()     ? conc_cmd
                           : timing_cmd->parsed()   ? timing_cmd
                                                    : validate_cmd;
        if (!config_path.empty()) {
            apply_config_file(config_path, cfg, [&](const std::string& key) {
                static const std::map<std::string, std::string> flag_of = {
                    {"preset", "--preset"}, {"discrete_csv", "--discrete"},
                    {"M", "--M"}, {"lo", "--lo"}, {"hi", "--hi"},
                    {"theta1", "--theta1"}, {"alpha", "--alpha"},
                    {"epsilon", "--epsilon"}, {"n_draws", "--N"},
                    {"omega", "--omega"}, {"seed", "--seed"},
                    {"eval_draws", "--eval-draws"}, {"eval_grid_lo", "--grid-lo"},
                    {"eval_grid_hi", "--grid-hi"}, {"eval_grid_count", "--grid-count"},
                    {"output_dir", "--out"}, {"record_trace", "--trace"},
                    {"run_oracle", "--with-oracle"},
                    {"randomized_epoch_y", "--randomized-y"}, {"t_override", "--T"},
                    {"eta_override", "--eta"}, {"runs", "--runs"}, {"n_list", "--N-list"}};
                const auto it = flag_of.find(key);
                return it != flag_of.end() && active->count(it->second) > 0;
            });
        }

        if (run_cmd->parsed()) return cmd_run(cfg);
        if (oracle_cmd->parsed()) return cmd_oracle(cfg);
        if (conc_cmd->parsed()) return cmd_concentration(cfg);
        if (timing_cmd->parsed()) return cmd_timing(cfg);
        return cmd_validate(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
