// Command-line front end: run scenarios, recompute metrics from a ledger.

#include "swarmsim/experiment.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace swarmsim;

namespace {

ScenarioConfig load_scenario(const std::string& source)
{
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), source) != names.end())
        return builtin_scenario(source);
    std::ifstream in(source);
    if (!in)
        throw std::runtime_error("no builtin or readable file named '" + source + "'");
    return parse_scenario(in);
}

int cmd_run(const std::string& source,
            std::optional<std::int32_t> runs,
            std::optional<std::uint64_t> seed,
            std::optional<std::string> out,
            std::int32_t jobs)
{
    auto cfg = load_scenario(source);
    if (runs)
        cfg.runs = *runs;
    if (seed)
        cfg.rng_seed = *seed;
    cfg.validate();

    const fs::path dir = out ? fs::path(*out) : default_output_dir() / cfg.name;
    const auto report = run_experiment(cfg, dir, jobs);
    std::cout << cfg.name << ": " << report.succeeded << '/' << cfg.runs << " runs written to "
              << report.directory.string() << '\n';
    for (const auto& f : report.failures)
        std::cerr << "  failed: " << f << '\n';
    return report.failures.empty() ? 0 : 1;
}

int cmd_metrics(const std::string& ledger_path, const std::string& out)
{
    std::ifstream in(ledger_path);
    if (!in)
        throw std::runtime_error("cannot read " + ledger_path);
    const auto ledger = RunLedger::read_csv(in);
    const auto tables = write_metrics(ledger, out);
    std::cout << tables.size() << " metric tables written to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Flow-level BitTorrent swarm simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a scenario file or builtin and write ledgers and metrics");
    std::string source;
    std::optional<std::int32_t> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::int32_t jobs = static_cast<std::int32_t>(std::max(1u, std::thread::hardware_concurrency()));
    run->add_option("scenario", source, "scenario file or builtin name")->required();
    run->add_option("--runs", runs, "override the scenario's run count")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "override the base rng seed");
    run->add_option("--out", out, "output directory (default $SWARMSIM_OUT_DIR/<name> or results/<name>)");
    run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

    auto* metrics = app.add_subcommand("metrics", "recompute metric CSVs from a ledger CSV");
    std::string ledger_path;
    std::string metrics_out = ".";
    metrics->add_option("ledger", ledger_path, "ledger.csv from a previous run")->required();
    metrics->add_option("--out", metrics_out, "output directory");

    auto* list = app.add_subcommand("list-builtins", "print builtin scenario names");
    bool show = false;
    list->add_flag("--show", show, "print each builtin in scenario-file form");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(source, runs, seed, out, jobs);
        if (*metrics)
            return cmd_metrics(ledger_path, metrics_out);
        for (const auto& name : builtin_scenario_names()) {
            if (show)
                std::cout << "# " << name << '\n' << serialize_scenario(builtin_scenario(name)) << '\n';
            else
                std::cout << name << '\n';
        }
        return 0;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
