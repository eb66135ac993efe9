#ifndef SWARMSIM_ENGINE_HPP
#define SWARMSIM_ENGINE_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/peer.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/scenario.hpp"
#include "swarmsim/tracker.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace swarmsim {

/// Raised when a run can't make progress or overruns the watchdog.
struct simulation_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// One piece moving from uploader to downloader.
struct Flow
{
    PeerId uploader = 0;
    PeerId downloader = 0;
    PieceIndex piece = 0;
    double rate = 0.0; // assigned in the last tick
};

/**
 * Fluid, tick-based swarm. Each step runs due rechokes, issues requests,
 * moves bytes for one tick, then handles completed pieces and departures.
 */
class Simulation
{
public:
    Simulation(const ScenarioConfig& config, std::uint64_t rng_seed);

    void step();
    bool finished() const noexcept { return finished_; }

    double now() const noexcept { return static_cast<double>(tick_) * config_.tick_length; }
    std::int64_t tick() const noexcept { return tick_; }
    std::int64_t max_ticks() const noexcept { return max_ticks_; }

    const RunLedger& ledger() const noexcept { return ledger_; }
    RunLedger take_ledger() { return std::move(ledger_); }

    const ScenarioConfig& config() const noexcept { return config_; }
    PeerId seed_id() const noexcept { return seed_id_; }
    /// Valid ids are 1..N+1; index 0 is a placeholder.
    const PeerRuntime& peer(PeerId id) const { return peers_.at(static_cast<std::size_t>(id)); }
    std::span<const Flow> flows() const noexcept { return flows_; }

private:
    struct Completed
    {
        PeerId uploader;
        PeerId downloader;
        PieceIndex piece;
    };

    PeerRuntime& mut(PeerId id) { return peers_.at(static_cast<std::size_t>(id)); }
    std::size_t pair(PeerId a, PeerId b) const { return static_cast<std::size_t>(a) * id_space_ + static_cast<std::size_t>(b); }

    void connect(PeerId a, PeerId b, std::optional<double> cap_of_a, std::optional<double> cap_of_b);
    void run_rechokes(double now);
    void rechoke(PeerRuntime& p, double now, bool periodic);
    void check_announced_capacities(PeerRuntime& p, double now);
    std::optional<double> observed_upload_rate(PeerId id, double now) const;
    void apply_decision(PeerRuntime& p, const UnchokeDecision& d, double now);
    void issue_requests();
    std::vector<Completed> transfer(double now, double end);
    void complete(const std::vector<Completed>& done, double t);
    void announce_have(PeerRuntime& d, PieceIndex piece, double t);
    void set_interest(PeerRuntime& a, PeerRuntime& b, bool value, double t);
    void depart(PeerRuntime& d, double t);
    void cancel_flow(PeerId uploader, PeerId downloader);
    void check_progress_possible() const;

    ScenarioConfig config_;
    Rng rng_;
    std::size_t id_space_ = 0;
    PeerId seed_id_ = 0;
    std::int64_t tick_ = 0;
    std::int64_t period_ticks_ = 10;
    std::int64_t max_ticks_ = 0;
    bool finished_ = false;
    std::int32_t leechers_left_ = 0;

    std::vector<PeerRuntime> peers_;
    Tracker tracker_;
    RunLedger ledger_;

    std::vector<Flow> flows_;
    std::vector<std::int32_t> flow_at_; // pair -> index into flows_, or -1
    std::vector<bool> seed_sent_;
    std::vector<double> upload_caps_;
    std::vector<double> download_caps_; // empty when no peer has one

    // For capacity checks: bytes each peer uploaded, and seconds it had an
    // upload in progress, over the rate window.
    std::vector<RateWindow> uploaded_;
    std::vector<RateWindow> upload_busy_;
    std::vector<double> optimistic_since_; // pair -> start of current optimistic stint, or +inf once checked
};

/// Runs a scenario to completion and returns its ledger.
RunLedger run(const ScenarioConfig& config, std::uint64_t rng_seed);

} // namespace swarmsim

#endif
