#ifndef SWARMSIM_PEER_HPP
#define SWARMSIM_PEER_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/pieces.hpp"
#include "swarmsim/rng.hpp"

#include <array>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace swarmsim {

inline constexpr double kRechokePeriod = 10.0;
inline constexpr double kSnubTimeout = 30.0;
inline constexpr double kDefaultRateWindow = 20.0;
inline constexpr double kSeedRecentUnchoke = 20.0;

/**
 * Bytes received from (or sent to) one remote, bucketed by arrival time.
 * The estimate is the sum over (now - length, now] divided by the full
 * window length, so a fresh connection ramps up rather than spiking.
 */
class RateWindow
{
public:
    struct Sample
    {
        double time = 0.0;
        double bytes = 0.0;
    };

    explicit RateWindow(double length = kDefaultRateWindow);

    /// Times must be non-decreasing. Old samples are dropped as new ones arrive.
    void record(double time, double bytes);
    double rate(double now) const;
    double length() const noexcept { return length_; }
    const std::deque<Sample>& samples() const noexcept { return samples_; }

private:
    std::deque<Sample> samples_;
    double length_;
};

double estimate_rate(const RateWindow& window, double now);

/// A remote that has never sent anything is not snubbed.
bool is_snubbed(std::optional<double> last_data_received, double now, double timeout = kSnubTimeout);

/// Number of parallel uploads for an upload cap in bytes/s, unless overridden.
std::int32_t parallel_uploads_for(double upload_cap, std::optional<std::int32_t> override_n = std::nullopt);

/// Everything a choking round needs to know about one remote peer.
struct ChokeCandidate
{
    PeerId id = 0;
    bool interested = false; // the remote is interested in the local peer
    bool snubbed = false;
    double rate = 0.0; // leecher: rate received from it; seed: rate sent to it
    bool unchoked = false; // currently unchoked by the local peer
    double unchoked_since = 0.0; // time of the unchoke message that opened it
    bool pending_requests = false;
    bool optimistic_allowed = true; // false during a liar cooldown
    bool similar_capacity = false; // announced capacity close to our own
};

struct UnchokeDecision
{
    std::vector<PeerId> regular;
    std::vector<PeerId> optimistic; // in the order they were drawn

    bool unchokes(PeerId id) const;
    std::optional<UnchokeKind> kind_of(PeerId id) const;
};

struct LeecherRoundParams
{
    std::int32_t n_uploads = 4;
    bool optimistic_round = false;
    bool prefer_similar = false;
    /// Optimistic unchokes from the last optimistic round, in draw order.
    std::span<const PeerId> previous_optimistic;
};

/**
 * Leecher-state round. Interested, non-snubbed remotes are ranked by the rate
 * we receive from them and the best n-1 get regular unchokes. On optimistic
 * rounds, random remotes that aren't regularly unchoked are unchoked one by
 * one until an interested one is reached. On other rounds the previous
 * optimistic draw is replayed in order, which keeps the optimistic slot for
 * the whole thirty seconds. At most n interested remotes end up unchoked.
 * Rate ties are broken uniformly at random.
 */
UnchokeDecision leecher_rechoke(std::span<const ChokeCandidate> remotes, const LeecherRoundParams& params, Rng& rng);

/// The pre-4.0 seed algorithm: the leecher round ranked by upload rate to
/// each remote, with no snubbing.
UnchokeDecision seed_rechoke_legacy(std::span<const ChokeCandidate> remotes, const LeecherRoundParams& params, Rng& rng);

/**
 * Optimistic unchokes a seed performs in each of the three rechoke periods
 * of a thirty second cycle: round(n/2) in total, spread evenly, with the
 * remainder in the earlier periods.
 */
std::array<std::int32_t, 3> seed_optimistic_schedule(std::int32_t n_uploads);

struct SeedRoundParams
{
    std::int32_t n_uploads = 4;
    std::int32_t optimistic_slots = 0; // n_o for this period
    double now = 0.0;
    double recent_window = kSeedRecentUnchoke;
    /// Regular slots left empty for lack of candidates go to extra random
    /// unchokes, so the seed keeps n uploads whenever n leechers want data.
    bool fill_free_slots = true;
};

/**
 * Seed-state round (4.0 variant). Candidates are interested, currently
 * unchoked leechers whose unchoke is recent or who still have requests
 * pending, most recently unchoked first, ties by our upload rate to them.
 * The first n - n_o keep regular unchokes; the rest of the slots go to
 * random interested leechers that are currently choked.
 */
UnchokeDecision seed_rechoke_modified(std::span<const ChokeCandidate> remotes, const SeedRoundParams& params, Rng& rng);

struct CapacityVerdict
{
    bool liar = false;
    double cooldown_until = 0.0; // meaningful only for liars
};

/// A remote is a liar when it uploads below threshold_fraction of what it
/// announced. Exactly at the threshold is fine.
CapacityVerdict verify_announced_capacity(double observed_rate,
                                          double announced_cap,
                                          double threshold_fraction,
                                          double now,
                                          double cooldown);

enum class Role : std::uint8_t
{
    leecher,
    seed,
};

struct UnchokeSlot
{
    bool active = false;
    UnchokeKind kind = UnchokeKind::regular;
    double since = 0.0;
};

/// The local peer's view of one remote peer.
struct RemoteLink
{
    bool connected = false;
    RateWindow received;
    RateWindow sent;
    std::optional<double> last_data_received;
    std::optional<double> last_unchoke_msg_sent;
    UnchokeSlot unchoke; // local -> remote
    bool unchoked_by_remote = false; // remote -> local
    bool remote_interested = false; // remote wants our pieces
    bool interested = false; // we want the remote's pieces
    bool remote_requesting = false; // a transfer local -> remote is in progress
    std::int32_t interesting = 0; // pieces the remote has that we lack
    std::optional<double> announced_cap;
    double cooldown_until = -std::numeric_limits<double>::infinity();
};

/**
 * Full protocol state of one peer during a run. Per-remote state lives in
 * `links`, indexed by PeerId.
 */
struct PeerRuntime
{
    PeerId id = 0;
    Role role = Role::leecher;
    std::string label;
    double upload_cap = 0.0;
    std::optional<double> download_cap;
    std::int32_t n_uploads = 4;

    Bitfield bitfield;
    std::vector<bool> in_flight; // pieces currently being fetched
    RarestSet rarity;
    std::vector<double> partial; // bytes received so far, per piece

    std::vector<RemoteLink> links;
    std::vector<PeerId> peer_set; // kept sorted

    std::int32_t round_counter = 0;
    std::int32_t periodic_rounds = 0;
    std::int32_t phase_tick = 0;
    bool rechoke_pending = false;
    std::vector<PeerId> optimistic_order;

    bool connected = true;

    PeerRuntime(PeerId id, Role role, std::int32_t num_pieces, std::size_t id_space, double rate_window);

    RemoteLink& link(PeerId remote) { return links.at(static_cast<std::size_t>(remote)); }
    const RemoteLink& link(PeerId remote) const { return links.at(static_cast<std::size_t>(remote)); }

    bool is_seed() const noexcept { return role == Role::seed; }
    bool is_snubbed(PeerId remote, double now) const;
    bool in_peer_set(PeerId remote) const { return link(remote).connected; }

    /// Choke-round view of every remote in the peer set. Seeds rank by what
    /// they send, leechers by what they receive.
    std::vector<ChokeCandidate> choke_candidates(double now, bool similar_by_announced_cap) const;
};

} // namespace swarmsim

#endif
