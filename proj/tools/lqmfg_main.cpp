#include "lqmfg/commands.hpp"

#include <CLI11.hpp>

#include <string>
#include <vector>

namespace {

std::vector<int> parse_ns(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int n = std::atoi(tok.c_str());
        if (n < 2) throw lqmfg::ParseError("--Ns entries must be integers >= 2, got '" + tok + "'");
        out.push_back(n);
    }
    if (out.empty()) throw lqmfg::ParseError("--Ns list is empty");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQ mean-field-game coefficient solver (Master equation and N-player Nash "
                 "system on Hilbert spaces)"};
    app.require_subcommand(1);

    std::string model, out_dir = "out", params = "master", ns_text = "2,4,8,16,32,64";
    lqmfg::detail::CliOverrides ov;
    int grid = 0;
    double tol = 0;
    bool faithful = false, strict = false;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool with_params) {
        cmd->add_option("--model", model, "model file path")->required();
        cmd->add_option("--out", out_dir, "output directory");
        if (with_params)
            cmd->add_option("--params", params, "coefficient system: master | nash:N");
        cmd->add_option("--grid", grid, "override [solver] grid (time cells)");
        cmd->add_option("--tol", tol, "override [solver] tol (Picard tolerance)");
        cmd->add_flag("--faithful", faithful, "use the existence proof's interval schedule");
        cmd->add_flag("--strict", strict, "a priori bound violations become errors");
        cmd->add_option("--seed", seed, "override [simulate] seed")->each([&](const std::string&) {
            seed_set = true;
        });
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the coefficient system");
    add_common(solve, true);
    CLI::App* sweep = app.add_subcommand("nash-sweep", "Nash -> Master convergence sweep");
    add_common(sweep, false);
    sweep->add_option("--Ns", ns_text, "comma-separated player counts, e.g. 4,8,16");
    CLI::App* vintage = app.add_subcommand("vintage", "vintage-capital study");
    add_common(vintage, true);
    CLI::App* simulate = app.add_subcommand("simulate", "forward simulation and MC cost check");
    add_common(simulate, false);

    CLI11_PARSE(app, argc, argv);

    if (grid > 0) ov.grid = grid;
    if (tol > 0) ov.tol = tol;
    if (faithful) ov.faithful = true;
    if (strict) ov.strict = true;
    if (seed_set) ov.seed = seed;

    try {
        if (solve->parsed()) return lqmfg::cmd_solve(model, params, out_dir, ov);
        if (sweep->parsed()) return lqmfg::cmd_nash_sweep(model, parse_ns(ns_text), out_dir, ov);
        if (vintage->parsed()) return lqmfg::cmd_vintage(model, out_dir, params, ov);
        if (simulate->parsed()) return lqmfg::cmd_simulate(model, out_dir, ov);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
