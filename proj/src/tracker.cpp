#include "swarmsim/tracker.hpp"

#include <algorithm>

namespace swarmsim {

Tracker::Tracker(std::int32_t max_peer_set, bool capacity_extension)
    : max_peer_set_(max_peer_set)
    , extension_(capacity_extension)
{
    if (max_peer_set < 1)
        throw config_error("max peer set must be at least 1");
}

void Tracker::join(PeerId peer, double joined_at, std::optional<double> announced_cap)
{
    registry_[peer] = Entry{joined_at, extension_ ? announced_cap : std::nullopt};
}

void Tracker::leave(PeerId peer)
{
    registry_.erase(peer);
}

std::vector<PeerListing> Tracker::announce(PeerId joiner, Rng& rng) const
{
    if (!registry_.contains(joiner))
        throw std::logic_error("announce from an unregistered peer");

    std::vector<PeerId> others;
    others.reserve(registry_.size());
    for (const auto& [id, entry] : registry_)
        if (id != joiner)
            others.push_back(id);

    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    const std::size_t k = std::min(others.size(), static_cast<std::size_t>(max_peer_set_));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + uniform_index(rng, others.size() - i);
        std::swap(others[i], others[j]);
    }

    std::vector<PeerListing> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back({others[i], registry_.at(others[i]).announced_cap});
    return out;
}

} // namespace swarmsim
