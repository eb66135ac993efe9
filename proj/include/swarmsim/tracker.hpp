#ifndef SWARMSIM_TRACKER_HPP
#define SWARMSIM_TRACKER_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/rng.hpp"

#include <map>
#include <optional>
#include <vector>

namespace swarmsim {

struct PeerListing
{
    PeerId id = 0;
    std::optional<double> announced_cap; // present iff the capacity extension is on

    friend bool operator==(const PeerListing&, const PeerListing&) = default;
};

/**
 * Registry of the peers currently in the torrent. Announces return a uniform
 * random subset of the other registered peers; with the capacity extension
 * the subset also carries each peer's self-reported upload capacity.
 */
class Tracker
{
public:
    explicit Tracker(std::int32_t max_peer_set = 80, bool capacity_extension = false);

    /// Registers (or re-registers) a peer. The announced capacity is dropped
    /// when the extension is off.
    void join(PeerId peer, double joined_at, std::optional<double> announced_cap = std::nullopt);
    void leave(PeerId peer);

    bool contains(PeerId peer) const { return registry_.contains(peer); }
    std::size_t size() const noexcept { return registry_.size(); }
    std::int32_t max_peer_set() const noexcept { return max_peer_set_; }
    bool capacity_extension() const noexcept { return extension_; }

    /// Peer set for `joiner`, which must already be registered. The subset is
    /// drawn without looking at capacities.
    std::vector<PeerListing> announce(PeerId joiner, Rng& rng) const;

private:
    struct Entry
    {
        double joined_at = 0.0;
        std::optional<double> announced_cap;
    };

    std::map<PeerId, Entry> registry_;
    std::int32_t max_peer_set_;
    bool extension_;
};

} // namespace swarmsim

#endif
