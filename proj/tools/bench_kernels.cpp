// Compares serial and OpenMP execution of the hot kernels: per-epoch
// subgradient estimation and grid accumulation. Results must match bitwise;
// timings show the parallel speedup on this machine.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "lfd/eval.hpp"
#include "lfd/kernels.hpp"
#include "lfd/model.hpp"
#include "lfd/smd.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::int64_t epochs = 200;
    std::int64_t draws = 100000;
    if (argc > 1) epochs = std::stoll(argv[1]);
    if (argc > 2) draws = std::stoll(argv[2]);

    const lfd::TestingProblem problem =
        lfd::gaussian_location_problem(200, -5.0, 0.0, 2.0, 0.1);
    std::printf("threads available: %d\n", lfd::max_threads());

    for (const auto policy : {lfd::ExecPolicy::Serial, lfd::ExecPolicy::Parallel}) {
        const char* name = policy == lfd::ExecPolicy::Serial ? "serial" : "parallel";

        lfd::SmdConfig cfg;
        cfg.alpha = 0.1;
        cfg.epsilon = 0.1;
        cfg.n_draws = 1;
        cfg.seed = 7;
        cfg.t_override = epochs;
        cfg.eta_override = 0.00617284;
        cfg.policy = policy;
        for (int i = 0; i <= 400; ++i) cfg.eval_grid.push_back(-6.0 + 12.0 * i / 400.0);

        auto t0 = std::chrono::steady_clock::now();
        const lfd::SmdOutput out = lfd::run(problem, cfg);
        const double t_run = seconds_since(t0);

        const lfd::TestFn phi = [&](double y) {
            return lfd::np_test(out.kappa_bar, y, problem) ? 1.0 : 0.0;
        };
        t0 = std::chrono::steady_clock::now();
        const lfd::TestEvaluation ev = lfd::mc_size_power(phi, problem, draws, 7, policy);
        const double t_eval = seconds_since(t0);

        std::printf("%-8s  %6lld epochs in %8.3f s   %6lld eval draws in %8.3f s   "
                    "kappa_bar[0]=%.17g  power=%.17g\n",
                    name, static_cast<long long>(epochs), t_run,
                    static_cast<long long>(draws), t_eval, out.kappa_bar.values[0],
                    ev.power);
    }
    return 0;
}
