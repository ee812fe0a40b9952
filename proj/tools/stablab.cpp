// stablab: numerical laboratory for stable solutions of semilinear elliptic
// problems with variable coefficients.
//
//   stablab solve       --config cfg.json [--out dir] [--no-timestamp]
//   stablab branch      --config cfg.json [--out dir] [--no-timestamp]
//   stablab verify      --config cfg.json [--out dir] [--threads N]
//                       [--no-timestamp] [--bless]
//   stablab convergence --config cfg.json [--out dir] [--no-timestamp]
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure,
// 4 verification failure.

#include <CLI11.hpp>

#include "stablab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stable-solution laboratory for semilinear elliptic problems"};
    app.require_subcommand(1);

    std::string config;
    stablab::harness::CliOptions opt;
    opt.threads = 0;  // 0: fall back to STABLAB_THREADS, then 1
    std::string out_dir;

    auto add_common = [&](CLI::App* cmd, bool with_threads, bool with_bless) {
        cmd->add_option("--config", config, "JSON run configuration")->required();
        cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
        cmd->add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp header from CSV output");
        if (with_threads)
            cmd->add_option("--threads", opt.threads, "worker threads for family sweeps");
        if (with_bless)
            cmd->add_flag("--bless", opt.bless, "rewrite the regression bounds from this run");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one problem and dump the field");
    add_common(solve, false, false);
    CLI::App* branch = app.add_subcommand("branch", "trace the stable branch in lambda");
    add_common(branch, false, false);
    CLI::App* verify = app.add_subcommand("verify", "run the estimate battery and report CSV");
    add_common(verify, true, true);
    CLI::App* conv = app.add_subcommand("convergence", "grid-refinement order study");
    add_common(conv, false, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : stablab::harness::kConfigError;
    }

    if (!out_dir.empty()) opt.out_dir = out_dir;
    if (solve->parsed()) return stablab::harness::cmd_solve(config, opt);
    if (branch->parsed()) return stablab::harness::cmd_branch(config, opt);
    if (verify->parsed()) return stablab::harness::cmd_verify(config, opt);
    if (conv->parsed()) return stablab::harness::cmd_convergence(config, opt);
    return stablab::harness::kConfigError;
}
