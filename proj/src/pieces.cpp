#include "swarmsim/pieces.hpp"

#include <limits>

namespace swarmsim {

RarestSet::RarestSet(std::int32_t num_pieces, std::uint64_t order_seed)
    : counts_(static_cast<std::size_t>(num_pieces), 0)
    , buckets_(1)
    , pos_(static_cast<std::size_t>(num_pieces))
    , order_rng_(order_seed)
{
    for (PieceIndex i = 0; i < num_pieces; ++i) {
        buckets_[0].push_back(i);
        pos_[static_cast<std::size_t>(i)] = i;
    }
}

void RarestSet::move(PieceIndex piece, std::int32_t from, std::int32_t to)
{
    const auto p = static_cast<std::size_t>(piece);
    if (pos_[p] < 0)
        return;
    if (buckets_.size() <= static_cast<std::size_t>(to))
        buckets_.resize(static_cast<std::size_t>(to) + 1);

    auto& src = buckets_[static_cast<std::size_t>(from)];
    const auto at = static_cast<std::size_t>(pos_[p]);
    src[at] = src.back();
    pos_[static_cast<std::size_t>(src[at])] = static_cast<std::int32_t>(at);
    src.pop_back();

    auto& dst = buckets_[static_cast<std::size_t>(to)];
    const auto slot = uniform_index(order_rng_, dst.size() + 1);
    if (slot == dst.size()) {
        dst.push_back(piece);
    }
    else {
        const PieceIndex displaced = dst[slot];
        pos_[static_cast<std::size_t>(displaced)] = static_cast<std::int32_t>(dst.size());
        dst.push_back(displaced);
        dst[slot] = piece;
    }
    pos_[p] = static_cast<std::int32_t>(slot);
}

void RarestSet::add_bitfield(const Bitfield& remote)
{
    if (remote.size() != static_cast<std::int32_t>(counts_.size()))
        throw config_error("bitfield size does not match the rarest set");
    for (PieceIndex i = 0; i < remote.size(); ++i)
        if (remote.has(i))
            on_have(i);
}

void RarestSet::remove_bitfield(const Bitfield& remote)
{
    if (remote.size() != static_cast<std::int32_t>(counts_.size()))
        throw config_error("bitfield size does not match the rarest set");
    for (PieceIndex i = 0; i < remote.size(); ++i) {
        if (!remote.has(i))
            continue;
        auto& c = counts_[static_cast<std::size_t>(i)];
        --c;
        move(i, c + 1, c);
    }
}

void RarestSet::on_have(PieceIndex piece)
{
    auto& c = counts_.at(static_cast<std::size_t>(piece));
    ++c;
    move(piece, c - 1, c);
}

void RarestSet::drop(PieceIndex piece)
{
    const auto p = static_cast<std::size_t>(piece);
    if (pos_.at(p) < 0)
        return;
    auto& src = buckets_[static_cast<std::size_t>(counts_[p])];
    const auto at = static_cast<std::size_t>(pos_[p]);
    src[at] = src.back();
    pos_[static_cast<std::size_t>(src[at])] = static_cast<std::int32_t>(at);
    src.pop_back();
    pos_[p] = -1;
}

std::vector<PieceIndex> RarestSet::rarest(const Bitfield& local) const
{
    std::vector<PieceIndex> out;
    std::int32_t best = std::numeric_limits<std::int32_t>::max();
    for (PieceIndex i = 0; i < local.size(); ++i) {
        const auto c = counts_[static_cast<std::size_t>(i)];
        if (local.has(i) || c == 0)
            continue;
        if (c < best) {
            best = c;
            out.clear();
        }
        if (c == best)
            out.push_back(i);
    }
    return out;
}

std::optional<PieceIndex> select_piece(const Bitfield& local,
                                       const Bitfield& uploader,
                                       const std::vector<bool>& in_flight,
                                       const RarestSet& rarity,
                                       PiecePolicy policy,
                                       Rng& rng)
{
    if (local.size() != uploader.size() || static_cast<std::size_t>(local.size()) != in_flight.size())
        throw config_error("bitfields describe different content");

    auto eligible = [&](PieceIndex i) {
        return uploader.has(i) && !local.has(i) && !in_flight[static_cast<std::size_t>(i)];
    };

    if (policy == PiecePolicy::deterministic) {
        const auto& buckets = rarity.buckets();
        for (std::size_t c = 1; c < buckets.size(); ++c)
            for (PieceIndex i : buckets[c])
                if (eligible(i))
                    return i;
        return std::nullopt;
    }

    std::int32_t best = std::numeric_limits<std::int32_t>::max();
    std::vector<PieceIndex> ties;
    for (PieceIndex i = 0; i < local.size(); ++i) {
        if (!eligible(i))
            continue;
        const auto c = rarity.count(i);
        if (c < best) {
            best = c;
            ties.clear();
        }
        if (c == best)
            ties.push_back(i);
    }
    if (ties.empty())
        return std::nullopt;
    if (policy == PiecePolicy::index_order)
        return ties.front();
    return ties[uniform_index(rng, ties.size())];
}

} // namespace swarmsim
