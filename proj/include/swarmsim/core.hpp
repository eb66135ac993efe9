#ifndef SWARMSIM_CORE_HPP
#define SWARMSIM_CORE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swarmsim {

using PeerId = std::int32_t;
using PieceIndex = std::int32_t;

/// One kilobyte as the rate limits are expressed (kB/s).
inline constexpr double kKiB = 1024.0;

/// Thrown for inconsistent inputs: mismatched content geometry, bad scenario
/// fields, malformed ledger rows.
struct config_error : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct ContentSpec
{
    std::int32_t num_pieces = 453;
    std::int64_t piece_size = 256 * 1024;

    std::int64_t total_bytes() const noexcept { return num_pieces * piece_size; }
    void validate() const;

    friend bool operator==(const ContentSpec&, const ContentSpec&) = default;
};

/**
 * Set of pieces a peer holds. Pieces are only ever added; a bitfield holding
 * every piece is a seed's.
 */
class Bitfield
{
public:
    Bitfield() = default;
    explicit Bitfield(std::int32_t num_pieces, bool full = false);

    std::int32_t size() const noexcept { return static_cast<std::int32_t>(bits_.size()); }
    std::int32_t count() const noexcept { return count_; }
    bool complete() const noexcept { return count_ == size(); }
    bool empty() const noexcept { return count_ == 0; }

    bool has(PieceIndex piece) const { return bits_.at(static_cast<std::size_t>(piece)); }
    /// Returns false if the piece was already present.
    bool add(PieceIndex piece);

    std::vector<PieceIndex> pieces() const;

    friend bool operator==(const Bitfield&, const Bitfield&) = default;

private:
    std::vector<bool> bits_;
    std::int32_t count_ = 0;
};

/// Pieces `holder` has that `wanter` lacks. Empty exactly when `wanter` is not
/// interested in `holder`.
std::vector<PieceIndex> interesting_pieces(const Bitfield& holder, const Bitfield& wanter);

struct ClassSpec
{
    std::string name;
    std::int32_t count = 0;
    double upload_cap = 0.0; // bytes/s
    std::optional<double> download_cap; // bytes/s

    void validate() const;

    friend bool operator==(const ClassSpec&, const ClassSpec&) = default;
};

enum class EventKind : std::uint8_t
{
    peer_join,
    connect,
    unchoke_start,
    unchoke_end,
    interest_change,
    bytes_transferred,
    piece_complete,
    peer_done,
    seed_piece_sent,
    liar_flagged,
    run_end,
};

enum class UnchokeKind : std::uint8_t
{
    regular,
    optimistic,
};

std::string_view to_string(EventKind kind);
std::string_view to_string(UnchokeKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/**
 * One ledger record. Column meaning depends on the kind:
 *
 *   peer_join        from=peer, bytes=upload cap (bytes/s), flag=class label index
 *   connect          from, to (symmetric connection)
 *   unchoke_start/end from=uploader, to=remote, flag=UnchokeKind
 *   interest_change  from is interested in to iff flag != 0
 *   bytes_transferred from=uploader, to=downloader, piece, bytes; time is the
 *                    start of the tick the bytes moved in
 *   piece_complete   from=peer, piece
 *   peer_done        from=peer
 *   seed_piece_sent  from=seed, to=receiver, piece, flag=1 on the first copy
 *   liar_flagged     from=local, to=remote whose announced capacity failed
 *   run_end          no fields
 */
struct LedgerEvent
{
    double time = 0.0;
    EventKind kind = EventKind::run_end;
    PeerId from = 0;
    PeerId to = 0;
    PieceIndex piece = -1;
    std::int64_t bytes = 0;
    std::int32_t flag = 0;

    friend bool operator==(const LedgerEvent&, const LedgerEvent&) = default;
};

/**
 * Append-only log of everything that happens in one run. Every metric is
 * computed from this alone.
 */
class RunLedger
{
public:
    void append(const LedgerEvent& event);

    void peer_join(double time, PeerId peer, std::string_view label, double upload_cap);
    void connect(double time, PeerId a, PeerId b);
    void unchoke_start(double time, PeerId from, PeerId to, UnchokeKind kind);
    void unchoke_end(double time, PeerId from, PeerId to, UnchokeKind kind);
    void interest_change(double time, PeerId from, PeerId to, bool interested);
    void bytes_transferred(double time, PeerId from, PeerId to, PieceIndex piece, std::int64_t bytes);
    void piece_complete(double time, PeerId peer, PieceIndex piece);
    void peer_done(double time, PeerId peer);
    void seed_piece_sent(double time, PeerId seed, PeerId to, PieceIndex piece, bool first_time);
    void liar_flagged(double time, PeerId from, PeerId to);
    void run_end(double time);

    const std::vector<LedgerEvent>& events() const noexcept { return events_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::string& label(std::int32_t index) const { return labels_.at(static_cast<std::size_t>(index)); }

    /// `time,event_kind,from,to,piece,bytes,flag` with a header row; columns
    /// that don't apply to a kind are left empty.
    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    static RunLedger read_csv(std::istream& in);

    friend bool operator==(const RunLedger&, const RunLedger&) = default;

private:
    std::int32_t intern_label(std::string_view label);

    std::vector<LedgerEvent> events_;
    std::vector<std::string> labels_;
};

/// Shortest text that parses back to the same double.
std::string format_number(double value);

} // namespace swarmsim

#endif
