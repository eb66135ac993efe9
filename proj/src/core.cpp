#include "swarmsim/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace swarmsim {

void ContentSpec::validate() const
{
    if (num_pieces < 1)
        throw config_error("content must have at least one piece");
    if (piece_size < 1)
        throw config_error("piece size must be at least one byte");
}

Bitfield::Bitfield(std::int32_t num_pieces, bool full)
    : bits_(static_cast<std::size_t>(std::max(num_pieces, 0)), full)
    , count_(full ? std::max(num_pieces, 0) : 0)
{
}

bool Bitfield::add(PieceIndex piece)
{
    auto bit = bits_.at(static_cast<std::size_t>(piece));
    if (bit)
        return false;
    bit = true;
    ++count_;
    return true;
}

std::vector<PieceIndex> Bitfield::pieces() const
{
    std::vector<PieceIndex> out;
    out.reserve(static_cast<std::size_t>(count_));
    for (PieceIndex i = 0; i < size(); ++i)
        if (bits_[static_cast<std::size_t>(i)])
            out.push_back(i);
    return out;
}

std::vector<PieceIndex> interesting_pieces(const Bitfield& holder, const Bitfield& wanter)
{
    if (holder.size() != wanter.size())
        throw config_error("bitfields describe different content");
    std::vector<PieceIndex> out;
    for (PieceIndex i = 0; i < holder.size(); ++i)
        if (holder.has(i) && !wanter.has(i))
            out.push_back(i);
    return out;
}

void ClassSpec::validate() const
{
    if (name.empty() || name.find_first_of(",\n") != std::string::npos)
        throw config_error("class name must be non-empty and contain no commas");
    if (count < 0)
        throw config_error("class '" + name + "' has a negative peer count");
    if (!(upload_cap > 0.0))
        throw config_error("class '" + name + "' needs a positive upload cap");
    if (download_cap && !(*download_cap > 0.0))
        throw config_error("class '" + name + "' has a non-positive download cap");
}

namespace {

constexpr std::array<std::string_view, 11> kind_names = {
    "peer_join",   "connect",         "unchoke_start", "unchoke_end",
    "interest",    "bytes",           "piece_complete", "peer_done",
    "seed_piece_sent", "liar_flagged", "run_end",
};

} // namespace

std::string_view to_string(EventKind kind)
{
    return kind_names.at(static_cast<std::size_t>(kind));
}

std::string_view to_string(UnchokeKind kind)
{
    return kind == UnchokeKind::regular ? "regular" : "optimistic";
}

std::optional<EventKind> parse_event_kind(std::string_view text)
{
    for (std::size_t i = 0; i < kind_names.size(); ++i)
        if (kind_names[i] == text)
            return static_cast<EventKind>(i);
    return std::nullopt;
}

std::string format_number(double value)
{
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

void RunLedger::append(const LedgerEvent& event)
{
    if (!events_.empty() && event.time < events_.back().time)
        throw std::logic_error("ledger timestamps must be non-decreasing");
    events_.push_back(event);
}

std::int32_t RunLedger::intern_label(std::string_view label)
{
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it != labels_.end())
        return static_cast<std::int32_t>(it - labels_.begin());
    labels_.emplace_back(label);
    return static_cast<std::int32_t>(labels_.size() - 1);
}

void RunLedger::peer_join(double time, PeerId peer, std::string_view label, double upload_cap)
{
    append({time, EventKind::peer_join, peer, 0, -1, static_cast<std::int64_t>(upload_cap + 0.5),
            intern_label(label)});
}

void RunLedger::connect(double time, PeerId a, PeerId b)
{
    append({time, EventKind::connect, a, b, -1, 0, 0});
}

void RunLedger::unchoke_start(double time, PeerId from, PeerId to, UnchokeKind kind)
{
    append({time, EventKind::unchoke_start, from, to, -1, 0, static_cast<std::int32_t>(kind)});
}

void RunLedger::unchoke_end(double time, PeerId from, PeerId to, UnchokeKind kind)
{
    append({time, EventKind::unchoke_end, from, to, -1, 0, static_cast<std::int32_t>(kind)});
}

void RunLedger::interest_change(double time, PeerId from, PeerId to, bool interested)
{
    append({time, EventKind::interest_change, from, to, -1, 0, interested ? 1 : 0});
}

void RunLedger::bytes_transferred(double time, PeerId from, PeerId to, PieceIndex piece, std::int64_t bytes)
{
    append({time, EventKind::bytes_transferred, from, to, piece, bytes, 0});
}

void RunLedger::piece_complete(double time, PeerId peer, PieceIndex piece)
{
    append({time, EventKind::piece_complete, peer, 0, piece, 0, 0});
}

void RunLedger::peer_done(double time, PeerId peer)
{
    append({time, EventKind::peer_done, peer, 0, -1, 0, 0});
}

void RunLedger::seed_piece_sent(double time, PeerId seed, PeerId to, PieceIndex piece, bool first_time)
{
    append({time, EventKind::seed_piece_sent, seed, to, piece, 0, first_time ? 1 : 0});
}

void RunLedger::liar_flagged(double time, PeerId from, PeerId to)
{
    append({time, EventKind::liar_flagged, from, to, -1, 0, 0});
}

void RunLedger::run_end(double time)
{
    append({time, EventKind::run_end, 0, 0, -1, 0, 0});
}

namespace {

struct Columns
{
    bool from = false, to = false, piece = false, bytes = false, flag = false;
};

Columns columns_for(EventKind kind)
{
    switch (kind) {
    case EventKind::peer_join: return {true, false, false, true, true};
    case EventKind::connect: return {true, true, false, false, false};
    case EventKind::unchoke_start:
    case EventKind::unchoke_end: return {true, true, false, false, true};
    case EventKind::interest_change: return {true, true, false, false, true};
    case EventKind::bytes_transferred: return {true, true, true, true, false};
    case EventKind::piece_complete: return {true, false, true, false, false};
    case EventKind::peer_done: return {true, false, false, false, false};
    case EventKind::seed_piece_sent: return {true, true, true, false, true};
    case EventKind::liar_flagged: return {true, true, false, false, false};
    case EventKind::run_end: return {};
    }
    return {};
}

template <typename Int>
Int parse_int(std::string_view field, std::size_t line)
{
    Int value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw config_error("ledger line " + std::to_string(line) + ": bad integer '" + std::string(field) + "'");
    return value;
}

double parse_double(std::string_view field, std::size_t line)
{
    double value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw config_error("ledger line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
    return value;
}

} // namespace

void RunLedger::write_csv(std::ostream& out) const
{
    out << "time,event_kind,from,to,piece,bytes,flag\n";
    std::string row;
    for (const auto& e : events_) {
        const Columns c = columns_for(e.kind);
        row.clear();
        row += format_number(e.time);
        row += ',';
        row += to_string(e.kind);
        row += ',';
        if (c.from)
            row += std::to_string(e.from);
        row += ',';
        if (c.to)
            row += std::to_string(e.to);
        row += ',';
        if (c.piece)
            row += std::to_string(e.piece);
        row += ',';
        if (c.bytes)
            row += std::to_string(e.bytes);
        row += ',';
        if (c.flag) {
            switch (e.kind) {
            case EventKind::peer_join: row += label(e.flag); break;
            case EventKind::unchoke_start:
            case EventKind::unchoke_end: row += to_string(static_cast<UnchokeKind>(e.flag)); break;
            default: row += std::to_string(e.flag); break;
            }
        }
        row += '\n';
        out << row;
    }
}

std::string RunLedger::to_csv() const
{
    std::ostringstream out;
    write_csv(out);
    return std::move(out).str();
}

RunLedger RunLedger::read_csv(std::istream& in)
{
    RunLedger ledger;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || line != "time,event_kind,from,to,piece,bytes,flag")
        throw config_error("ledger csv is missing its header row");
    ++line_no;

    std::array<std::string_view, 7> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::string_view rest = line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto comma = rest.find(',');
            if (i + 1 < fields.size()) {
                if (comma == std::string_view::npos)
                    throw config_error("ledger line " + std::to_string(line_no) + ": expected 7 columns");
                fields[i] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            }
            else {
                if (comma != std::string_view::npos)
                    throw config_error("ledger line " + std::to_string(line_no) + ": expected 7 columns");
                fields[i] = rest;
            }
        }

        const auto kind = parse_event_kind(fields[1]);
        if (!kind)
            throw config_error("ledger line " + std::to_string(line_no) + ": unknown event '" + std::string(fields[1]) + "'");

        LedgerEvent e;
        e.time = parse_double(fields[0], line_no);
        e.kind = *kind;
        const Columns c = columns_for(*kind);
        if (c.from)
            e.from = parse_int<PeerId>(fields[2], line_no);
        if (c.to)
            e.to = parse_int<PeerId>(fields[3], line_no);
        if (c.piece)
            e.piece = parse_int<PieceIndex>(fields[4], line_no);
        if (c.bytes)
            e.bytes = parse_int<std::int64_t>(fields[5], line_no);
        if (c.flag) {
            switch (*kind) {
            case EventKind::peer_join: e.flag = ledger.intern_label(fields[6]); break;
            case EventKind::unchoke_start:
            case EventKind::unchoke_end:
                if (fields[6] == "regular")
                    e.flag = static_cast<std::int32_t>(UnchokeKind::regular);
                else if (fields[6] == "optimistic")
                    e.flag = static_cast<std::int32_t>(UnchokeKind::optimistic);
                else
                    throw config_error("ledger line " + std::to_string(line_no) + ": bad unchoke kind");
                break;
            default: e.flag = parse_int<std::int32_t>(fields[6], line_no); break;
            }
        }
        ledger.append(e);
    }
    return ledger;
}

} // namespace swarmsim
