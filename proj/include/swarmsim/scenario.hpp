#ifndef SWARMSIM_SCENARIO_HPP
#define SWARMSIM_SCENARIO_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/pieces.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace swarmsim {

enum class SeedAlgorithm : std::uint8_t
{
    modified,
    legacy,
};

/**
 * Everything that defines an experiment. Leechers get ids 1..N in class
 * order, skipping the seed's id; the seed defaults to N + 1.
 */
struct ScenarioConfig
{
    std::string name = "custom";
    ContentSpec content;
    std::vector<ClassSpec> classes;
    double seed_cap = 200 * kKiB;
    std::optional<PeerId> seed_id;
    SeedAlgorithm seed_algorithm = SeedAlgorithm::modified;
    std::optional<std::int32_t> n_uploads_override = 4;
    PiecePolicy piece_policy = PiecePolicy::deterministic;
    bool tracker_extension = false;
    std::map<PeerId, double> announce_multiplier;
    std::int32_t max_peer_set = 80;
    double tick_length = 1.0;
    double rate_window = 20.0;
    double liar_threshold = 0.5;
    double liar_cooldown = 300.0;
    std::int32_t runs = 1;
    std::uint64_t rng_seed = 1;

    std::int32_t leecher_count() const;
    PeerId resolved_seed_id() const;
    /// Leecher ids with their class, in id order.
    std::vector<std::pair<PeerId, const ClassSpec*>> leecher_layout() const;

    void validate() const;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

std::string_view to_string(SeedAlgorithm algorithm);
std::string_view to_string(PiecePolicy policy);

/**
 * Flat `key = value` text, one setting per line, `#` comments. Classes are
 * repeated `class = name,count,upload_kBps[,download_kBps]` lines and rate
 * fields are in kB/s (1 kB = 1024 bytes).
 */
ScenarioConfig parse_scenario(std::istream& in);
ScenarioConfig parse_scenario(std::string_view text);
std::string serialize_scenario(const ScenarioConfig& config);

std::vector<std::string> builtin_scenario_names();
/// Throws config_error for an unknown name.
ScenarioConfig builtin_scenario(std::string_view name);

} // namespace swarmsim

#endif
