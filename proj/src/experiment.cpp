#include "swarmsim/experiment.hpp"

#include "swarmsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

namespace swarmsim {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

void create_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

std::string run_dir_name(std::int32_t index)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "run_%03d", index);
    return buf;
}

} // namespace

std::vector<RunOutcome> run_many(const ScenarioConfig& config, std::int32_t jobs)
{
    config.validate();
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(config.runs));
    for (std::int32_t i = 0; i < config.runs; ++i) {
        outcomes[static_cast<std::size_t>(i)].index = i;
        outcomes[static_cast<std::size_t>(i)].seed = config.rng_seed + static_cast<std::uint64_t>(i);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < outcomes.size(); i = next++) {
            auto& o = outcomes[i];
            try {
                o.ledger = run(config, o.seed);
            }
            catch (const std::exception& e) {
                o.error = e.what();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, config.runs));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t)
            pool.emplace_back(worker);
        worker();
    }
    return outcomes;
}

std::vector<MetricTable> write_metrics(const RunLedger& ledger, const std::filesystem::path& dir)
{
    create_dir(dir);
    auto tables = run_metrics(ledger);
    for (const auto& t : tables) {
        auto out = open_for_write(dir / (t.name + ".csv"));
        t.write_csv(out);
    }
    return tables;
}

ExperimentReport run_experiment(const ScenarioConfig& config, const std::filesystem::path& out, std::int32_t jobs)
{
    create_dir(out);
    {
        auto f = open_for_write(out / "scenario.txt");
        f << serialize_scenario(config);
    }

    ExperimentReport report;
    report.directory = out;
    std::map<std::string, std::vector<MetricTable>> by_name;
    std::vector<std::string> order;
    for (auto& o : run_many(config, jobs)) {
        if (!o.ledger) {
            report.failures.push_back(run_dir_name(o.index) + " (seed " + std::to_string(o.seed) + "): " + o.error);
            continue;
        }
        const auto dir = out / run_dir_name(o.index);
        create_dir(dir);
        {
            auto f = open_for_write(dir / "ledger.csv");
            o.ledger->write_csv(f);
        }
        for (auto& t : write_metrics(*o.ledger, dir)) {
            if (!by_name.contains(t.name))
                order.push_back(t.name);
            by_name[t.name].push_back(std::move(t));
        }
        o.ledger.reset();
        ++report.succeeded;
    }

    if (report.succeeded > 0) {
        create_dir(out / "aggregate");
        for (const auto& name : order) {
            auto f = open_for_write(out / "aggregate" / (name + ".csv"));
            aggregate(by_name[name]).write_csv(f);
        }
    }
    return report;
}

std::filesystem::path default_output_dir()
{
    if (const char* env = std::getenv("SWARMSIM_OUT_DIR"); env != nullptr && *env != '\0')
        return env;
    return "results";
}

} // namespace swarmsim
