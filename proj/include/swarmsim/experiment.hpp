#ifndef SWARMSIM_EXPERIMENT_HPP
#define SWARMSIM_EXPERIMENT_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace swarmsim {

struct RunOutcome
{
    std::int32_t index = 0;
    std::uint64_t seed = 0;
    std::optional<RunLedger> ledger; // empty when the run failed
    std::string error;
};

/// Runs `config.runs` independent runs with seeds rng_seed + i on up to
/// `jobs` threads. A failing run is reported in its outcome and does not
/// stop the others.
std::vector<RunOutcome> run_many(const ScenarioConfig& config, std::int32_t jobs = 1);

struct ExperimentReport
{
    std::filesystem::path directory;
    std::int32_t succeeded = 0;
    std::vector<std::string> failures;
};

/**
 * run_many, then writes under `out`:
 *   scenario.txt
 *   run_NNN/ledger.csv and one CSV per metric
 *   aggregate/<metric>.csv over the successful runs
 * Throws std::runtime_error if `out` can't be created or written.
 */
ExperimentReport run_experiment(const ScenarioConfig& config, const std::filesystem::path& out, std::int32_t jobs = 1);

/// Writes ledger-derived metric CSVs into `dir`.
std::vector<MetricTable> write_metrics(const RunLedger& ledger, const std::filesystem::path& dir);

/// $SWARMSIM_OUT_DIR if set, else ./results.
std::filesystem::path default_output_dir();

} // namespace swarmsim

#endif
