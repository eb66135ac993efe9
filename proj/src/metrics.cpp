#include "swarmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

namespace swarmsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_unchoke(const LedgerEvent& e, UnchokeKind kind)
{
    return (e.kind == EventKind::unchoke_start || e.kind == EventKind::unchoke_end)
           && e.flag == static_cast<std::int32_t>(kind);
}

double last_time(const RunLedger& ledger)
{
    return ledger.events().empty() ? 0.0 : ledger.events().back().time;
}

} // namespace

std::vector<PeerId> PeerDirectory::leechers() const
{
    std::vector<PeerId> out;
    for (const auto& [id, cls] : class_of)
        out.push_back(id);
    return out;
}

std::vector<PeerId> PeerDirectory::members(const std::string& cls) const
{
    std::vector<PeerId> out;
    for (const auto& [id, c] : class_of)
        if (c == cls)
            out.push_back(id);
    return out;
}

std::vector<std::string> PeerDirectory::classes() const
{
    std::set<std::string> seen;
    for (const auto& [id, c] : class_of)
        seen.insert(c);
    return {seen.begin(), seen.end()};
}

double PeerDirectory::left_at(PeerId id) const
{
    const auto it = done_at.find(id);
    return it == done_at.end() ? end_time : it->second;
}

PeerDirectory peer_directory(const RunLedger& ledger)
{
    PeerDirectory dir;
    dir.end_time = last_time(ledger);
    for (const auto& e : ledger.events()) {
        switch (e.kind) {
        case EventKind::peer_join: {
            dir.upload_cap[e.from] = static_cast<double>(e.bytes);
            dir.max_id = std::max(dir.max_id, e.from);
            const auto& label = ledger.label(e.flag);
            if (label == "seed")
                dir.seed = e.from;
            else
                dir.class_of[e.from] = label;
            break;
        }
        case EventKind::peer_done:
            dir.done_at[e.from] = e.time;
            break;
        default:
            break;
        }
    }
    return dir;
}

PairMatrix unchoke_matrix(const RunLedger& ledger, UnchokeKind kind)
{
    const auto dir = peer_directory(ledger);
    PairMatrix out(static_cast<std::size_t>(dir.max_id) + 1);
    PairMatrix open(out.size);
    std::fill(open.cells.begin(), open.cells.end(), kNaN);
    for (const auto& e : ledger.events()) {
        if (!is_unchoke(e, kind))
            continue;
        if (e.kind == EventKind::unchoke_start)
            open.at(e.from, e.to) = e.time;
        else if (!std::isnan(open.at(e.from, e.to))) {
            out.at(e.from, e.to) += e.time - open.at(e.from, e.to);
            open.at(e.from, e.to) = kNaN;
        }
    }
    for (std::size_t i = 0; i < open.cells.size(); ++i)
        if (!std::isnan(open.cells[i]))
            out.cells[i] += dir.end_time - open.cells[i];
    return out;
}

std::optional<double> clustering_index(const PairMatrix& regular, const PeerDirectory& dir, PeerId peer)
{
    const auto own = dir.class_of.find(peer);
    if (own == dir.class_of.end())
        return std::nullopt;
    double same = 0.0;
    double all = 0.0;
    for (const auto& [other, cls] : dir.class_of) {
        if (other == peer)
            continue;
        const double s = regular.at(peer, other);
        all += s;
        if (cls == own->second)
            same += s;
    }
    if (all <= 0.0)
        return std::nullopt;
    return same / all;
}

double null_clustering_baseline(std::size_t class_size, std::size_t leecher_count)
{
    if (leecher_count < 2 || class_size < 1)
        return 0.0;
    return static_cast<double>(class_size - 1) / static_cast<double>(leecher_count - 1);
}

PairMatrix availability_matrix(const RunLedger& ledger)
{
    const auto dir = peer_directory(ledger);
    const auto n = static_cast<std::size_t>(dir.max_id) + 1;
    PairMatrix joined(n), since(n), interested(n), out(n);
    std::fill(joined.cells.begin(), joined.cells.end(), kNaN);
    std::fill(since.cells.begin(), since.cells.end(), kNaN);
    std::fill(out.cells.begin(), out.cells.end(), kNaN);
    for (const auto& e : ledger.events()) {
        if (e.kind == EventKind::connect) {
            joined.at(e.from, e.to) = e.time;
            joined.at(e.to, e.from) = e.time;
        }
        else if (e.kind == EventKind::interest_change) {
            double& open = since.at(e.from, e.to);
            if (e.flag != 0 && std::isnan(open))
                open = e.time;
            else if (e.flag == 0 && !std::isnan(open)) {
                interested.at(e.from, e.to) += e.time - open;
                open = kNaN;
            }
        }
    }
    for (PeerId x = 1; x < dir.max_id + 1; ++x)
        for (PeerId y = 1; y < dir.max_id + 1; ++y) {
            if (x == y || std::isnan(joined.at(x, y)))
                continue;
            const double left = std::min(dir.left_at(x), dir.left_at(y));
            double busy = interested.at(x, y);
            if (!std::isnan(since.at(x, y)))
                busy += left - since.at(x, y);
            const double membership = left - joined.at(x, y);
            if (membership > 0.0)
                out.at(x, y) = busy / membership;
        }
    return out;
}

std::optional<double> peer_availability(const RunLedger& ledger, PeerId x, PeerId y)
{
    const auto m = availability_matrix(ledger);
    if (x < 0 || y < 0 || static_cast<std::size_t>(std::max(x, y)) >= m.size || std::isnan(m.at(x, y)))
        return std::nullopt;
    return m.at(x, y);
}

std::vector<UtilizationPoint> upload_utilization(const RunLedger& ledger, double interval)
{
    if (!(interval > 0.0))
        throw config_error("utilization interval must be positive");
    const auto dir = peer_directory(ledger);
    auto connected_at = [&](PeerId id, double t) {
        const auto it = dir.done_at.find(id);
        return it == dir.done_at.end() || it->second > t;
    };

    std::vector<std::map<PeerId, double>> by_peer;
    for (const auto& e : ledger.events()) {
        if (e.kind != EventKind::bytes_transferred)
            continue;
        const auto k = static_cast<std::size_t>(std::floor(e.time / interval));
        if (by_peer.size() <= k)
            by_peer.resize(k + 1);
        by_peer[k][e.from] += static_cast<double>(e.bytes);
    }

    std::vector<UtilizationPoint> out;
    for (std::size_t k = 0; static_cast<double>(k) * interval < dir.end_time; ++k) {
        const double start = static_cast<double>(k) * interval;
        const double end = std::min(start + interval, dir.end_time);
        double used = 0.0;
        double capacity = 0.0;
        for (const auto& [id, cap] : dir.upload_cap) {
            if (!connected_at(id, end))
                continue;
            capacity += cap * (end - start);
            if (k < by_peer.size())
                if (const auto it = by_peer[k].find(id); it != by_peer[k].end())
                    used += it->second;
        }
        if (capacity <= 0.0)
            break;
        out.push_back({start, end - start, used / capacity});
    }
    return out;
}

std::optional<std::int32_t> content_pieces(const RunLedger& ledger)
{
    std::optional<PeerId> first;
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::peer_done) {
            first = e.from;
            break;
        }
    if (!first)
        return std::nullopt;
    std::int32_t n = 0;
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::piece_complete && e.from == *first)
            ++n;
    return n;
}

std::optional<SeedCopyStats> seed_duplicate_overhead(const RunLedger& ledger)
{
    const auto pieces = content_pieces(ledger);
    if (!pieces)
        return std::nullopt;
    SeedCopyStats s;
    for (const auto& e : ledger.events()) {
        if (e.kind != EventKind::seed_piece_sent)
            continue;
        ++s.total_sent;
        if (e.flag != 0 && ++s.unique_sent == *pieces) {
            s.overhead = static_cast<double>(s.total_sent - s.unique_sent) / static_cast<double>(s.total_sent);
            return s;
        }
    }
    return std::nullopt;
}

std::optional<double> optimal_completion_time(const RunLedger& ledger)
{
    const auto pieces = content_pieces(ledger);
    if (!pieces)
        return std::nullopt;
    std::int32_t unique = 0;
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::seed_piece_sent && e.flag != 0 && ++unique == *pieces)
            return e.time;
    return std::nullopt;
}

CompletionStats completion_stats(const RunLedger& ledger, double resolution)
{
    const auto dir = peer_directory(ledger);
    CompletionStats out;
    std::map<std::string, std::size_t> class_size;
    for (const auto& [id, cls] : dir.class_of) {
        ++class_size[cls];
        out.times[cls];
        if (const auto it = dir.done_at.find(id); it != dir.done_at.end())
            out.times[cls].push_back(it->second);
    }
    double last = 0.0;
    for (auto& [cls, t] : out.times) {
        std::sort(t.begin(), t.end());
        if (!t.empty())
            last = std::max(last, t.back());
    }
    const auto steps = static_cast<std::size_t>(std::ceil(last / resolution));
    for (std::size_t i = 0; i <= steps; ++i)
        out.grid.push_back(static_cast<double>(i) * resolution);
    for (const auto& [cls, t] : out.times) {
        auto& cdf = out.cdf[cls];
        for (double g : out.grid) {
            const auto done = std::upper_bound(t.begin(), t.end(), g) - t.begin();
            cdf.push_back(static_cast<double>(done) / static_cast<double>(class_size[cls]));
        }
    }
    return out;
}

PairMatrix uploaded_bytes_matrix(const RunLedger& ledger)
{
    const auto dir = peer_directory(ledger);
    PairMatrix out(static_cast<std::size_t>(dir.max_id) + 1);
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::bytes_transferred)
            out.at(e.from, e.to) += static_cast<double>(e.bytes);
    return out;
}

std::map<PeerId, double> seed_unchoke_durations(const RunLedger& ledger, double from, double to)
{
    const auto dir = peer_directory(ledger);
    std::map<PeerId, double> out;
    std::map<PeerId, double> open;
    for (PeerId id : dir.leechers())
        out[id] = 0.0;
    auto add = [&](PeerId id, double a, double b) {
        a = std::max(a, from);
        b = std::min(b, to);
        if (b > a)
            out[id] += b - a;
    };
    for (const auto& e : ledger.events()) {
        if (e.from != dir.seed)
            continue;
        if (e.kind == EventKind::unchoke_start)
            open[e.to] = e.time;
        else if (e.kind == EventKind::unchoke_end) {
            if (const auto it = open.find(e.to); it != open.end()) {
                add(e.to, it->second, e.time);
                open.erase(it);
            }
        }
    }
    for (const auto& [id, start] : open)
        add(id, start, dir.end_time);
    return out;
}

double all_connected_until(const RunLedger& ledger)
{
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::peer_done)
            return e.time;
    return last_time(ledger);
}

std::map<PeerId, double> first_mutual_regular_unchoke(const RunLedger& ledger, const std::string& cls)
{
    const auto dir = peer_directory(ledger);
    auto member = [&](PeerId id) {
        const auto it = dir.class_of.find(id);
        return it != dir.class_of.end() && it->second == cls;
    };
    std::set<std::pair<PeerId, PeerId>> active;
    std::map<PeerId, double> out;
    for (const auto& e : ledger.events()) {
        if (!is_unchoke(e, UnchokeKind::regular) || !member(e.from) || !member(e.to))
            continue;
        if (e.kind == EventKind::unchoke_end) {
            active.erase({e.from, e.to});
            continue;
        }
        active.insert({e.from, e.to});
        if (active.contains({e.to, e.from})) {
            out.try_emplace(e.from, e.time);
            out.try_emplace(e.to, e.time);
        }
    }
    return out;
}

std::vector<LiarFlag> liar_flags(const RunLedger& ledger)
{
    std::vector<LiarFlag> out;
    for (const auto& e : ledger.events())
        if (e.kind == EventKind::liar_flagged)
            out.push_back({e.time, e.from, e.to});
    return out;
}

double mean(const std::vector<double>& values)
{
    if (values.empty())
        return kNaN;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        return kNaN;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]])
            ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            out[order[k]] = r;
        i = j + 1;
    }
    return out;
}

} // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        return kNaN;
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double mx = mean(rx);
    const double my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        return kNaN;
    return sxy / std::sqrt(sxx * syy);
}

double coefficient_of_variation(const std::vector<double>& values)
{
    const double m = mean(values);
    if (values.empty() || m == 0.0)
        return kNaN;
    double ss = 0.0;
    for (double v : values)
        ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size())) / m;
}

void MetricTable::add(std::vector<std::string> key, std::vector<double> row)
{
    if (key.size() != key_columns.size() || row.size() != value_columns.size())
        throw std::logic_error("metric row does not match the table '" + name + "'");
    keys.push_back(std::move(key));
    values.push_back(std::move(row));
}

void MetricTable::write_csv(std::ostream& out) const
{
    bool first = true;
    for (const auto* cols : {&key_columns, &value_columns})
        for (const auto& c : *cols) {
            out << (first ? "" : ",") << c;
            first = false;
        }
    out << '\n';
    for (std::size_t r = 0; r < keys.size(); ++r) {
        first = true;
        for (const auto& k : keys[r]) {
            out << (first ? "" : ",") << k;
            first = false;
        }
        for (double v : values[r]) {
            out << (first ? "" : ",");
            if (!std::isnan(v))
                out << format_number(v);
            first = false;
        }
        out << '\n';
    }
}

namespace {

std::string id_text(PeerId id)
{
    return std::to_string(id);
}

} // namespace

std::vector<MetricTable> run_metrics(const RunLedger& ledger)
{
    const auto dir = peer_directory(ledger);
    std::vector<MetricTable> out;

    std::vector<PeerId> everyone;
    for (const auto& [id, cap] : dir.upload_cap)
        everyone.push_back(id);
    auto class_label = [&](PeerId id) -> std::string {
        const auto it = dir.class_of.find(id);
        return it == dir.class_of.end() ? "seed" : it->second;
    };

    const auto regular = unchoke_matrix(ledger, UnchokeKind::regular);
    const auto optimistic = unchoke_matrix(ledger, UnchokeKind::optimistic);
    {
        MetricTable t{"unchoke_matrix", {"from", "to"}, {"regular_seconds", "optimistic_seconds"}, {}, {}};
        for (PeerId a : everyone)
            for (PeerId b : everyone)
                if (a != b)
                    t.add({id_text(a), id_text(b)}, {regular.at(a, b), optimistic.at(a, b)});
        out.push_back(std::move(t));
    }
    {
        const auto bytes = uploaded_bytes_matrix(ledger);
        MetricTable t{"uploaded_bytes", {"from", "to"}, {"bytes"}, {}, {}};
        for (PeerId a : everyone)
            for (PeerId b : everyone)
                if (a != b)
                    t.add({id_text(a), id_text(b)}, {bytes.at(a, b)});
        out.push_back(std::move(t));
    }
    {
        MetricTable t{"clustering", {"peer", "class"}, {"index"}, {}, {}};
        MetricTable c{"class_clustering", {"class"}, {"mean_index", "null_baseline"}, {}, {}};
        std::map<std::string, std::vector<double>> per_class;
        for (const auto& [id, cls] : dir.class_of) {
            const auto idx = clustering_index(regular, dir, id);
            t.add({id_text(id), cls}, {idx.value_or(kNaN)});
            if (idx)
                per_class[cls].push_back(*idx);
        }
        for (const auto& cls : dir.classes())
            c.add({cls}, {mean(per_class[cls]), null_clustering_baseline(dir.members(cls).size(), dir.class_of.size())});
        out.push_back(std::move(t));
        out.push_back(std::move(c));
    }
    {
        const auto avail = availability_matrix(ledger);
        MetricTable t{"availability", {"from", "to"}, {"availability"}, {}, {}};
        for (PeerId a : everyone)
            for (PeerId b : everyone)
                if (a != b && !std::isnan(avail.at(a, b)))
                    t.add({id_text(a), id_text(b)}, {avail.at(a, b)});
        out.push_back(std::move(t));
    }
    {
        MetricTable t{"utilization", {"interval_start"}, {"length", "utilization"}, {}, {}};
        for (const auto& p : upload_utilization(ledger))
            t.add({format_number(p.start)}, {p.length, p.ratio});
        out.push_back(std::move(t));
    }
    {
        MetricTable t{"completion", {"peer", "class"}, {"completion_time"}, {}, {}};
        for (const auto& [id, cls] : dir.class_of) {
            const auto it = dir.done_at.find(id);
            t.add({id_text(id), cls}, {it == dir.done_at.end() ? kNaN : it->second});
        }
        out.push_back(std::move(t));

        const auto stats = completion_stats(ledger);
        MetricTable cdf{"completion_cdf", {"time", "class"}, {"fraction"}, {}, {}};
        for (std::size_t i = 0; i < stats.grid.size(); ++i)
            for (const auto& [cls, f] : stats.cdf)
                cdf.add({format_number(stats.grid[i]), cls}, {f[i]});
        out.push_back(std::move(cdf));
    }
    {
        const double until = all_connected_until(ledger);
        const auto early = seed_unchoke_durations(ledger, 0.0, until);
        const auto total = seed_unchoke_durations(ledger, 0.0, dir.end_time);
        MetricTable t{"seed_unchoke", {"peer", "class"}, {"seconds_all_connected", "seconds_total"}, {}, {}};
        for (const auto& [id, s] : early)
            t.add({id_text(id), class_label(id)}, {s, total.at(id)});
        out.push_back(std::move(t));
    }
    {
        MetricTable t{"first_mutual", {"class"}, {"mean_time", "peers_reached"}, {}, {}};
        for (const auto& cls : dir.classes()) {
            std::vector<double> times;
            for (const auto& [id, time] : first_mutual_regular_unchoke(ledger, cls))
                times.push_back(time);
            t.add({cls}, {mean(times), static_cast<double>(times.size())});
        }
        out.push_back(std::move(t));
    }
    {
        MetricTable t{"summary", {"metric"}, {"value"}, {}, {}};
        const auto copy = seed_duplicate_overhead(ledger);
        t.add({"optimal_completion_time"}, {optimal_completion_time(ledger).value_or(kNaN)});
        t.add({"seed_pieces_sent"}, {copy ? static_cast<double>(copy->total_sent) : kNaN});
        t.add({"seed_unique_pieces"}, {copy ? static_cast<double>(copy->unique_sent) : kNaN});
        t.add({"seed_duplicate_overhead"}, {copy ? copy->overhead : kNaN});
        t.add({"run_length"}, {dir.end_time});
        t.add({"liar_flags"}, {static_cast<double>(liar_flags(ledger).size())});
        out.push_back(std::move(t));
    }
    return out;
}

MetricTable aggregate(const std::vector<MetricTable>& runs)
{
    if (runs.empty())
        throw std::logic_error("nothing to aggregate");
    const auto& shape = runs.front();
    MetricTable out;
    out.name = shape.name;
    out.key_columns = shape.key_columns;
    out.value_columns = {"runs"};
    for (const auto& v : shape.value_columns)
        for (const char* suffix : {"_mean", "_p10", "_p90"})
            out.value_columns.push_back(v + suffix);

    std::vector<std::vector<std::string>> order;
    std::map<std::vector<std::string>, std::vector<std::vector<double>>> cells;
    std::map<std::vector<std::string>, std::size_t> seen_in;
    for (const auto& run : runs) {
        if (run.key_columns != shape.key_columns || run.value_columns != shape.value_columns)
            throw std::logic_error("aggregating tables of different shapes");
        for (std::size_t r = 0; r < run.keys.size(); ++r) {
            auto [it, fresh] = cells.try_emplace(run.keys[r], shape.value_columns.size());
            if (fresh)
                order.push_back(run.keys[r]);
            ++seen_in[run.keys[r]];
            for (std::size_t c = 0; c < run.values[r].size(); ++c)
                if (!std::isnan(run.values[r][c]))
                    it->second[c].push_back(run.values[r][c]);
        }
    }
    for (const auto& key : order) {
        std::vector<double> row{static_cast<double>(seen_in[key])};
        for (const auto& col : cells[key]) {
            row.push_back(mean(col));
            row.push_back(percentile(col, 0.1));
            row.push_back(percentile(col, 0.9));
        }
        out.add(key, std::move(row));
    }
    return out;
}

} // namespace swarmsim
