// Command-line front end. Talks to the engine exclusively through the C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bubblesim/bubblesim_c.h"

namespace {

struct HandleDeleter {
    void operator()(bsim* h) const { bsim_destroy(h); }
};
using Handle = std::unique_ptr<bsim, HandleDeleter>;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    long long paths = -1;
    long long threads = -1;
    std::string engine;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "configuration file (key = value lines)");
    cmd->add_option("--out", o.out_dir, "output directory for CSV files");
    cmd->add_option("--seed", o.seed, "base seed override");
    cmd->add_option("--paths", o.paths, "trajectory count override");
    cmd->add_option("--threads", o.threads, "worker count (0 = hardware)");
    cmd->add_option("--engine", o.engine, "distribution | population");
}

int check(bsim* h, int rc, const char* what) {
    if (rc == BSIM_OK) return 0;
    std::fprintf(stderr, "%s failed (%d): %s\n", what, rc, bsim_last_error(h));
    return 1;
}

int apply_common(bsim* h, const CommonOpts& o) {
    if (!o.config_path.empty() &&
        check(h, bsim_config_load_file(h, o.config_path.c_str()), "loading config"))
        return 1;
    if (o.seed >= 0 && check(h, bsim_config_set(h, "seed", std::to_string(o.seed).c_str()), "set"))
        return 1;
    if (o.paths >= 0 &&
        check(h, bsim_config_set(h, "paths", std::to_string(o.paths).c_str()), "set"))
        return 1;
    if (o.threads >= 0 &&
        check(h, bsim_config_set(h, "threads", std::to_string(o.threads).c_str()), "set"))
        return 1;
    if (!o.engine.empty() && check(h, bsim_config_set(h, "engine", o.engine.c_str()), "set"))
        return 1;
    return 0;
}

void print_run_summary(bsim* h, bool with_tilt) {
    double paths = 0, wall = 0, rate = 0, mean1 = 0, se1 = 0;
    bsim_result_scalar(h, "paths", &paths);
    bsim_result_scalar(h, "wall_seconds", &wall);
    bsim_result_scalar(h, "paths_per_second", &rate);
    bsim_result_scalar(h, "mean_beta_1", &mean1);
    bsim_result_scalar(h, "se_beta_1", &se1);
    std::printf("paths: %.0f\n", paths);
    std::printf("wall seconds: %.3f (%.0f paths/s)\n", wall, rate);
    std::printf("mean beta at t1: %.9g (stderr %.3g)\n", mean1, se1);
    if (with_tilt) {
        double tm = 0, ts = 0;
        bsim_result_scalar(h, "tilt_mean_beta_1", &tm);
        bsim_result_scalar(h, "tilt_se_beta_1", &ts);
        std::printf("tilted mean beta at t1: %.9g (stderr %.3g)\n", tm, ts);
    }
}

int run_simulation(bsim* h, const CommonOpts& o, const char* preset, bool tilt) {
    if (preset && check(h, bsim_apply_preset(h, preset), "applying preset")) return 1;
    if (apply_common(h, o)) return 1;
    const char* out = o.out_dir.empty() ? nullptr : o.out_dir.c_str();
    if (tilt) {
        if (check(h, bsim_run_tilt(h, out), "tilt run")) return 1;
    } else {
        if (check(h, bsim_run(h, out), "run")) return 1;
    }
    print_run_summary(h, tilt);
    if (out) std::printf("CSV written to %s\n", out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Liquidity-driven bubble simulator with directed random matching"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string demo_out, verify_out;

    CLI::App* simulate = app.add_subcommand("simulate", "run the configured experiment");
    CLI::App* fig1 = app.add_subcommand("figure1", "a handful of individual trajectories");
    CLI::App* fig2 = app.add_subcommand("figure2", "averaged bubble, symmetric start");
    CLI::App* fig3 = app.add_subcommand("figure3", "averaged bubble, optimistic start");
    CLI::App* tilt = app.add_subcommand("tilt", "same seeds under base and tilted measures");
    CLI::App* verify = app.add_subcommand("verify-martingale",
                                          "construct q(k) and verify the price drift vanishes");
    CLI::App* demo = app.add_subcommand("matching-demo", "one seeded directed matching round");
    CLI::App* validate = app.add_subcommand("validate-config", "check a configuration file");

    for (CLI::App* cmd : {simulate, fig1, fig2, fig3, tilt, verify, demo, validate})
        add_common(cmd, opts);
    verify->add_option("--csv", verify_out, "write the per-period table to this file");
    demo->add_option("--csv", demo_out, "write the matched population to this file");

    CLI11_PARSE(app, argc, argv);

    Handle handle(bsim_create());
    bsim* h = handle.get();
    if (!h) {
        std::fprintf(stderr, "out of memory\n");
        return 1;
    }

    if (simulate->parsed()) return run_simulation(h, opts, nullptr, false);
    if (fig1->parsed()) return run_simulation(h, opts, "figure1", false);
    if (fig2->parsed()) return run_simulation(h, opts, "figure2", false);
    if (fig3->parsed()) return run_simulation(h, opts, "figure3", false);
    if (tilt->parsed()) {
        // With an explicit config the tilt comes from its `tilt` key; the
        // preset is only the no-config default.
        const char* preset = opts.config_path.empty() ? "figure3-tilt" : nullptr;
        return run_simulation(h, opts, preset, true);
    }

    if (verify->parsed()) {
        if (apply_common(h, opts)) return 1;
        const char* csv = verify_out.empty() ? nullptr : verify_out.c_str();
        if (check(h, bsim_verify_martingale(h, csv), "verify-martingale")) return 1;
        double periods = 0, res = 0, ratio = 0, a_ok = 0, m_ok = 0;
        bsim_result_scalar(h, "periods", &periods);
        bsim_result_scalar(h, "max_residual", &res);
        bsim_result_scalar(h, "max_mc_ratio", &ratio);
        bsim_result_scalar(h, "analytic_ok", &a_ok);
        bsim_result_scalar(h, "mc_ok", &m_ok);
        std::printf("periods: %.0f\n", periods);
        std::printf("analytic residual max: %.3g -> %s\n", res, a_ok > 0 ? "ok" : "FAIL");
        std::printf("monte-carlo |mean|/se max: %.3g -> %s\n", ratio, m_ok > 0 ? "ok" : "FAIL");
        if (csv) std::printf("per-period table written to %s\n", csv);
        return (a_ok > 0 && m_ok > 0) ? 0 : 1;
    }

    if (demo->parsed()) {
        if (apply_common(h, opts)) return 1;
        const char* csv = demo_out.empty() ? nullptr : demo_out.c_str();
        if (check(h, bsim_matching_demo(h, csv), "matching-demo")) return 1;
        double agents = 0, pairs = 0;
        bsim_result_scalar(h, "agents", &agents);
        bsim_result_scalar(h, "pairs_formed", &pairs);
        std::printf("agents: %.0f, pairs formed: %.0f\n", agents, pairs);
        if (csv) std::printf("population written to %s\n", csv);
        return 0;
    }

    if (validate->parsed()) {
        if (apply_common(h, opts)) return 1;
        char buf[8192];
        int n_errors = 0;
        if (check(h, bsim_validate(h, buf, sizeof(buf), &n_errors), "validate")) return 1;
        std::printf("%s", buf);
        return n_errors == 0 ? 0 : 1;
    }

    return 1;
}
