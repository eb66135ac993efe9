#include "swarmsim/peer.hpp"

#include <algorithm>
#include <cmath>

namespace swarmsim {

RateWindow::RateWindow(double length)
    : length_(length)
{
    if (!(length > 0.0))
        throw config_error("rate window length must be positive");
}

void RateWindow::record(double time, double bytes)
{
    if (!samples_.empty() && samples_.back().time == time)
        samples_.back().bytes += bytes;
    else
        samples_.push_back({time, bytes});
    while (!samples_.empty() && samples_.front().time <= time - length_)
        samples_.pop_front();
}

double RateWindow::rate(double now) const
{
    double sum = 0.0;
    for (const auto& s : samples_)
        if (s.time > now - length_ && s.time <= now)
            sum += s.bytes;
    return sum / length_;
}

double estimate_rate(const RateWindow& window, double now)
{
    return window.rate(now);
}

bool is_snubbed(std::optional<double> last_data_received, double now, double timeout)
{
    return last_data_received && *last_data_received < now - timeout;
}

std::int32_t parallel_uploads_for(double upload_cap, std::optional<std::int32_t> override_n)
{
    if (override_n)
        return *override_n;
    const double kbps = upload_cap / kKiB;
    if (kbps < 15.0)
        return 3;
    if (kbps < 42.0)
        return 4;
    if (kbps < 150.0)
        return 5;
    return 10;
}

bool UnchokeDecision::unchokes(PeerId id) const
{
    return kind_of(id).has_value();
}

std::optional<UnchokeKind> UnchokeDecision::kind_of(PeerId id) const
{
    if (std::find(regular.begin(), regular.end(), id) != regular.end())
        return UnchokeKind::regular;
    if (std::find(optimistic.begin(), optimistic.end(), id) != optimistic.end())
        return UnchokeKind::optimistic;
    return std::nullopt;
}

namespace {

std::vector<const ChokeCandidate*> shuffled(std::span<const ChokeCandidate> remotes, Rng& rng)
{
    std::vector<const ChokeCandidate*> out;
    out.reserve(remotes.size());
    for (const auto& r : remotes)
        out.push_back(&r);
    shuffle(std::span(out), rng);
    return out;
}

bool contains(const std::vector<PeerId>& ids, PeerId id)
{
    return std::find(ids.begin(), ids.end(), id) != ids.end();
}

UnchokeDecision rate_ranked_round(std::span<const ChokeCandidate> remotes,
                                  const LeecherRoundParams& params,
                                  bool use_snubbing,
                                  Rng& rng)
{
    UnchokeDecision out;

    // Shuffle first so the stable sort leaves rate ties in random order.
    auto ranked = shuffled(remotes, rng);
    std::erase_if(ranked, [&](const ChokeCandidate* c) {
        return !c->interested || (use_snubbing && c->snubbed);
    });
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const ChokeCandidate* a, const ChokeCandidate* b) { return a->rate > b->rate; });

    const auto regular_slots = static_cast<std::size_t>(std::max(params.n_uploads - 1, 0));
    for (std::size_t i = 0; i < ranked.size() && i < regular_slots; ++i)
        out.regular.push_back(ranked[i]->id);

    auto lookup = [&](PeerId id) -> const ChokeCandidate* {
        for (const auto& r : remotes)
            if (r.id == id)
                return &r;
        return nullptr;
    };

    if (params.optimistic_round) {
        std::vector<const ChokeCandidate*> preferred;
        std::vector<const ChokeCandidate*> rest;
        for (const auto& r : remotes) {
            if (contains(out.regular, r.id) || !r.optimistic_allowed)
                continue;
            (params.prefer_similar && r.similar_capacity ? preferred : rest).push_back(&r);
        }
        shuffle(std::span(preferred), rng);
        shuffle(std::span(rest), rng);
        preferred.insert(preferred.end(), rest.begin(), rest.end());
        for (const auto* c : preferred) {
            out.optimistic.push_back(c->id);
            if (c->interested)
                break;
        }
    }
    else {
        for (PeerId id : params.previous_optimistic) {
            const auto* c = lookup(id);
            if (c == nullptr || contains(out.regular, id) || !c->optimistic_allowed)
                continue;
            out.optimistic.push_back(id);
            if (c->interested)
                break;
        }
    }
    return out;
}

} // namespace

UnchokeDecision leecher_rechoke(std::span<const ChokeCandidate> remotes, const LeecherRoundParams& params, Rng& rng)
{
    return rate_ranked_round(remotes, params, true, rng);
}

UnchokeDecision seed_rechoke_legacy(std::span<const ChokeCandidate> remotes, const LeecherRoundParams& params, Rng& rng)
{
    return rate_ranked_round(remotes, params, false, rng);
}

std::array<std::int32_t, 3> seed_optimistic_schedule(std::int32_t n_uploads)
{
    const std::int32_t total = (std::max(n_uploads, 0) + 1) / 2; // round(n/2), halves up
    std::array<std::int32_t, 3> counts{};
    for (std::int32_t i = 0; i < 3; ++i)
        counts[static_cast<std::size_t>(i)] = total / 3 + (i < total % 3 ? 1 : 0);
    return counts;
}

UnchokeDecision seed_rechoke_modified(std::span<const ChokeCandidate> remotes, const SeedRoundParams& params, Rng& rng)
{
    UnchokeDecision out;

    auto ranked = shuffled(remotes, rng);
    std::erase_if(ranked, [&](const ChokeCandidate* c) {
        if (!c->interested || !c->unchoked)
            return true;
        const bool recent = params.now - c->unchoked_since < params.recent_window;
        return !recent && !c->pending_requests;
    });
    std::stable_sort(ranked.begin(), ranked.end(), [](const ChokeCandidate* a, const ChokeCandidate* b) {
        if (a->unchoked_since != b->unchoked_since)
            return a->unchoked_since > b->unchoked_since;
        return a->rate > b->rate;
    });

    const auto n = static_cast<std::size_t>(std::max(params.n_uploads, 0));
    const auto n_o = std::min(static_cast<std::size_t>(std::max(params.optimistic_slots, 0)), n);
    for (std::size_t i = 0; i < ranked.size() && i < n - n_o; ++i)
        out.regular.push_back(ranked[i]->id);

    std::size_t wanted = n_o;
    if (params.fill_free_slots)
        wanted = n - out.regular.size();

    auto pool = shuffled(remotes, rng);
    std::erase_if(pool, [](const ChokeCandidate* c) { return !c->interested || c->unchoked; });
    for (std::size_t i = 0; i < pool.size() && i < wanted; ++i)
        out.optimistic.push_back(pool[i]->id);
    return out;
}

CapacityVerdict verify_announced_capacity(double observed_rate,
                                          double announced_cap,
                                          double threshold_fraction,
                                          double now,
                                          double cooldown)
{
    if (observed_rate < threshold_fraction * announced_cap)
        return {true, now + cooldown};
    return {false, 0.0};
}

PeerRuntime::PeerRuntime(PeerId id_, Role role_, std::int32_t num_pieces, std::size_t id_space, double rate_window)
    : id(id_)
    , role(role_)
    , bitfield(num_pieces, role_ == Role::seed)
    , in_flight(static_cast<std::size_t>(num_pieces), false)
    , rarity(num_pieces)
    , partial(static_cast<std::size_t>(num_pieces), 0.0)
{
    RemoteLink blank;
    blank.received = RateWindow(rate_window);
    blank.sent = RateWindow(rate_window);
    links.assign(id_space, blank);
}

bool PeerRuntime::is_snubbed(PeerId remote, double now) const
{
    return swarmsim::is_snubbed(link(remote).last_data_received, now);
}

std::vector<ChokeCandidate> PeerRuntime::choke_candidates(double now, bool similar_by_announced_cap) const
{
    std::vector<ChokeCandidate> out;
    out.reserve(peer_set.size());
    for (PeerId r : peer_set) {
        const auto& l = link(r);
        ChokeCandidate c;
        c.id = r;
        c.interested = l.remote_interested;
        c.snubbed = !is_seed() && is_snubbed(r, now);
        c.rate = is_seed() ? l.sent.rate(now) : l.received.rate(now);
        c.unchoked = l.unchoke.active;
        c.unchoked_since = l.unchoke.since;
        c.pending_requests = l.remote_requesting;
        c.optimistic_allowed = now >= l.cooldown_until;
        if (similar_by_announced_cap && l.announced_cap) {
            const double ratio = *l.announced_cap / upload_cap;
            c.similar_capacity = ratio >= 0.5 && ratio <= 2.0;
        }
        out.push_back(c);
    }
    return out;
}

} // namespace swarmsim
