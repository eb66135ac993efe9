#ifndef SWARMSIM_PIECES_HPP
#define SWARMSIM_PIECES_HPP

#include "swarmsim/core.hpp"
#include "swarmsim/rng.hpp"

#include <optional>
#include <vector>

namespace swarmsim {

enum class PiecePolicy : std::uint8_t
{
    deterministic,   // first rarest piece in the peer's bucket order
    random_tiebreak, // uniform among the rarest, drawn per request
    index_order,     // lowest index among the rarest
};

/**
 * Replica counts of every piece across one peer's remote peers, plus the
 * order pieces sit in within each count bucket.
 *
 * Buckets behave like the mainline client's interest lists: a piece moving
 * to another bucket lands at a random position there (the displaced piece
 * goes to the back), and a piece leaving a bucket is replaced by the last
 * one. Pieces the local peer owns are dropped from the buckets.
 */
class RarestSet
{
public:
    RarestSet() = default;
    explicit RarestSet(std::int32_t num_pieces, std::uint64_t order_seed = 0);

    void add_bitfield(const Bitfield& remote);
    void remove_bitfield(const Bitfield& remote);
    void on_have(PieceIndex piece);
    /// The local peer now owns `piece`; it leaves the bucket order.
    void drop(PieceIndex piece);

    std::int32_t count(PieceIndex piece) const { return counts_.at(static_cast<std::size_t>(piece)); }
    const std::vector<std::int32_t>& counts() const noexcept { return counts_; }
    /// buckets()[c] lists the non-dropped pieces with c replicas, in order.
    const std::vector<std::vector<PieceIndex>>& buckets() const noexcept { return buckets_; }

    /// Pieces `local` lacks that some remote holds, at the minimal replica count.
    std::vector<PieceIndex> rarest(const Bitfield& local) const;

private:
    void move(PieceIndex piece, std::int32_t from, std::int32_t to);

    std::vector<std::int32_t> counts_;
    std::vector<std::vector<PieceIndex>> buckets_;
    std::vector<std::int32_t> pos_; // position in its bucket, -1 once dropped
    Rng order_rng_;
};

/**
 * Picks the piece `local` should request from `uploader`: among pieces the
 * uploader has, the local peer lacks and isn't already fetching elsewhere,
 * one with the fewest replicas. Returns nothing when no such piece exists.
 */
std::optional<PieceIndex> select_piece(const Bitfield& local,
                                       const Bitfield& uploader,
                                       const std::vector<bool>& in_flight,
                                       const RarestSet& rarity,
                                       PiecePolicy policy,
                                       Rng& rng);

} // namespace swarmsim

#endif
