#ifndef SWARMSIM_METRICS_HPP
#define SWARMSIM_METRICS_HPP

#include "swarmsim/core.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace swarmsim {

/// Who took part in a run, recovered from its ledger.
struct PeerDirectory
{
    PeerId seed = 0; // 0 when the ledger has no peer labelled "seed"
    PeerId max_id = 0;
    std::map<PeerId, std::string> class_of; // leechers only
    std::map<PeerId, double> upload_cap; // every peer, bytes/s
    std::map<PeerId, double> done_at; // leechers that finished
    double end_time = 0.0;

    std::vector<PeerId> leechers() const;
    std::vector<PeerId> members(const std::string& cls) const;
    std::vector<std::string> classes() const; // sorted
    /// When the peer left, or the end of the run for peers that stayed.
    double left_at(PeerId id) const;
};

PeerDirectory peer_directory(const RunLedger& ledger);

/// Dense square matrix indexed by PeerId.
struct PairMatrix
{
    std::size_t size = 0;
    std::vector<double> cells;

    explicit PairMatrix(std::size_t n = 0) : size(n), cells(n * n, 0.0) {}
    double& at(PeerId from, PeerId to) { return cells.at(index(from, to)); }
    double at(PeerId from, PeerId to) const { return cells.at(index(from, to)); }

private:
    std::size_t index(PeerId from, PeerId to) const
    {
        return static_cast<std::size_t>(from) * size + static_cast<std::size_t>(to);
    }
};

/// Seconds `from` kept `to` unchoked with the given kind. Open unchokes are
/// closed at the end of the run.
PairMatrix unchoke_matrix(const RunLedger& ledger, UnchokeKind kind = UnchokeKind::regular);

/**
 * Share of `peer`'s regular-unchoke time spent on leechers of its own class.
 * The seed counts on neither side. Missing when the peer never regularly
 * unchoked a leecher.
 */
std::optional<double> clustering_index(const PairMatrix& regular, const PeerDirectory& dir, PeerId peer);

/// Expected index if unchoke time were spread uniformly over the other leechers.
double null_clustering_baseline(std::size_t class_size, std::size_t leecher_count);

/// peer_availability for every ordered pair; NaN where never connected.
PairMatrix availability_matrix(const RunLedger& ledger);

/**
 * Fraction of the time `y` spent in `x`'s peer set during which `x` was
 * interested in `y`. Missing when they were never connected.
 */
std::optional<double> peer_availability(const RunLedger& ledger, PeerId x, PeerId y);

struct UtilizationPoint
{
    double start = 0.0;
    double length = 0.0;
    double ratio = 0.0;
};

/**
 * Per interval: bytes uploaded by the peers still connected at the
 * interval's end, divided by what their caps allow over the interval. The
 * trailing partial interval is kept with its actual length.
 */
std::vector<UtilizationPoint> upload_utilization(const RunLedger& ledger, double interval = 60.0);

/// Pieces in the content, taken from the first leecher to finish.
std::optional<std::int32_t> content_pieces(const RunLedger& ledger);

/// When the seed finished pushing its first full copy. Missing if it never did.
std::optional<double> optimal_completion_time(const RunLedger& ledger);

struct SeedCopyStats
{
    std::int64_t total_sent = 0; // pieces sent up to and including the full copy
    std::int64_t unique_sent = 0;
    double overhead = 0.0; // (total - unique) / total
};

std::optional<SeedCopyStats> seed_duplicate_overhead(const RunLedger& ledger);

struct CompletionStats
{
    std::map<std::string, std::vector<double>> times; // per class, sorted
    std::vector<double> grid; // CDF sample times
    std::map<std::string, std::vector<double>> cdf; // per class, on `grid`
};

CompletionStats completion_stats(const RunLedger& ledger, double resolution = 10.0);

/// Bytes moved from each peer to each other peer.
PairMatrix uploaded_bytes_matrix(const RunLedger& ledger);

/**
 * Seconds the seed spent unchoking each leecher (either kind), clipped to
 * [from, to].
 */
std::map<PeerId, double> seed_unchoke_durations(const RunLedger& ledger, double from, double to);

/// Moment every leecher is still present: [0, first departure).
double all_connected_until(const RunLedger& ledger);

/**
 * For each leecher of `cls`, the first time it and another member of `cls`
 * were regularly unchoking each other at once.
 */
std::map<PeerId, double> first_mutual_regular_unchoke(const RunLedger& ledger, const std::string& cls);

struct LiarFlag
{
    double time = 0.0;
    PeerId by = 0;
    PeerId liar = 0;
};

std::vector<LiarFlag> liar_flags(const RunLedger& ledger);

double mean(const std::vector<double>& values);
/// Linear interpolation between closest ranks; q in [0, 1].
double percentile(std::vector<double> values, double q);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double coefficient_of_variation(const std::vector<double>& values);

/**
 * A metric in CSV form: key columns identify a row, value columns hold
 * numbers. Missing values are NaN and written as empty cells.
 */
struct MetricTable
{
    std::string name;
    std::vector<std::string> key_columns;
    std::vector<std::string> value_columns;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<double>> values;

    void add(std::vector<std::string> key, std::vector<double> row);
    void write_csv(std::ostream& out) const;
};

/// Every per-run metric table.
std::vector<MetricTable> run_metrics(const RunLedger& ledger);

/**
 * Collapses the same table from several runs: per key and value column, the
 * mean, 10th and 90th percentile over the runs where the cell is present.
 */
MetricTable aggregate(const std::vector<MetricTable>& runs);

} // namespace swarmsim

#endif
