// Acceptance suite: one PASS/FAIL line per criterion.
//
//   swarmsim_acceptance [--criterion N]... [--jobs J]
//
// Exit status is non-zero when any selected criterion fails.

#include "swarmsim/bandwidth.hpp"
#include "swarmsim/engine.hpp"
#include "swarmsim/experiment.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/peer.hpp"
#include "swarmsim/scenario.hpp"

#include "../oracles/bandwidth_oracle.hpp"
#include "../oracles/choke_oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

using namespace swarmsim;

namespace {

struct Verdict
{
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 3)
{
    std::ostringstream out;
    out.precision(digits);
    out << v;
    return out.str();
}

int g_jobs = 1;

/// Runs each distinct scenario variant once per process.
const std::vector<RunLedger>& ledgers(const std::string& key, const ScenarioConfig& cfg)
{
    static std::map<std::string, std::vector<RunLedger>> cache;
    if (const auto it = cache.find(key); it != cache.end())
        return it->second;
    std::vector<RunLedger> out;
    for (auto& o : run_many(cfg, g_jobs)) {
        if (!o.ledger)
            throw std::runtime_error(key + " run " + std::to_string(o.index) + " failed: " + o.error);
        out.push_back(std::move(*o.ledger));
    }
    return cache.emplace(key, std::move(out)).first->second;
}

const std::vector<RunLedger>& builtin_runs(const std::string& name)
{
    return ledgers(name, builtin_scenario(name));
}

double median(std::vector<double> v)
{
    return percentile(std::move(v), 0.5);
}

std::map<std::string, double> class_clustering(const std::vector<RunLedger>& runs)
{
    std::map<std::string, std::vector<double>> pooled;
    for (const auto& led : runs) {
        const auto dir = peer_directory(led);
        const auto regular = unchoke_matrix(led, UnchokeKind::regular);
        for (const auto& [id, cls] : dir.class_of)
            if (const auto idx = clustering_index(regular, dir, id))
                pooled[cls].push_back(*idx);
    }
    std::map<std::string, double> out;
    for (const auto& [cls, v] : pooled)
        out[cls] = mean(v);
    return out;
}

Verdict criterion_1()
{
    const auto means = class_clustering(builtin_runs("three_class_200"));
    const std::map<std::string, double> floor{{"fast", 0.6}, {"medium", 0.45}, {"slow", 0.45}};
    Verdict v{true, {}};
    for (const auto& [cls, min] : floor) {
        const double m = means.count(cls) ? means.at(cls) : 0.0;
        v.pass = v.pass && m >= min;
        v.detail += cls + "=" + fmt(m) + " (>=" + fmt(min) + ") ";
    }
    return v;
}

Verdict criterion_2()
{
    const auto& runs = builtin_runs("three_class_100");
    const auto means = class_clustering(runs);
    const auto dir = peer_directory(runs.front());
    Verdict v{true, {}};
    for (const auto& cls : dir.classes()) {
        const double base = null_clustering_baseline(dir.members(cls).size(), dir.class_of.size());
        const double m = means.count(cls) ? means.at(cls) : 0.0;
        v.pass = v.pass && std::abs(m - base) <= 0.15;
        v.detail += cls + "=" + fmt(m) + " (null " + fmt(base) + ") ";
    }
    return v;
}

Verdict criterion_3()
{
    const auto& runs = builtin_runs("three_class_200");
    std::map<std::string, std::vector<double>> times;
    std::vector<double> optimal;
    for (const auto& led : runs) {
        for (const auto& [cls, t] : completion_stats(led).times)
            times[cls].insert(times[cls].end(), t.begin(), t.end());
        if (const auto o = optimal_completion_time(led))
            optimal.push_back(*o);
    }
    const double fast = median(times["fast"]);
    const double medium = median(times["medium"]);
    const double slow = median(times["slow"]);
    const double opt = mean(optimal);
    const bool ordered = fast < medium && medium < slow && fast <= 1.3 * opt;

    std::vector<double> rhos;
    for (const auto& led : builtin_runs("uniform_increase")) {
        const auto dir = peer_directory(led);
        std::vector<double> caps, done;
        for (const auto& [id, t] : dir.done_at) {
            caps.push_back(dir.upload_cap.at(id));
            done.push_back(t);
        }
        rhos.push_back(spearman(caps, done));
    }
    const double rho = mean(rhos);
    return {ordered && rho <= -0.8,
            "medians fast=" + fmt(fast, 4) + " medium=" + fmt(medium, 4) + " slow=" + fmt(slow, 4)
                + " vs 1.3*optimal=" + fmt(1.3 * opt, 4) + "; uniform_increase spearman=" + fmt(rho)};
}

/// Largest share of finish times that fit inside some [t, 1.25 t] band.
double band_share(std::vector<double> t)
{
    std::sort(t.begin(), t.end());
    std::size_t best = 0;
    for (std::size_t i = 0, j = 0; i < t.size(); ++i) {
        while (j < t.size() && t[j] <= 1.25 * t[i])
            ++j;
        best = std::max(best, j - i);
    }
    return t.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(t.size());
}

Verdict criterion_4()
{
    std::vector<double> shares;
    bool after = true;
    for (const auto& led : builtin_runs("three_class_100")) {
        const auto dir = peer_directory(led);
        std::vector<double> t;
        for (const auto& [id, d] : dir.done_at)
            t.push_back(d);
        shares.push_back(band_share(t));
        const auto opt = optimal_completion_time(led);
        after = after && opt && std::all_of(t.begin(), t.end(), [&](double d) { return d > *opt; });
    }
    const double share = mean(shares);
    return {share >= 0.9 && after,
            "mean share in a 25% band=" + fmt(share) + ", all after optimal=" + (after ? "yes" : "no")};
}

Verdict criterion_5()
{
    std::vector<double> opt;
    bool ok = true;
    for (const auto& led : builtin_runs("three_class_200")) {
        const auto o = optimal_completion_time(led);
        ok = ok && o && *o >= 560.0 && *o <= 750.0;
        opt.push_back(o.value_or(std::nan("")));
    }
    return {ok, "optimal completion min=" + fmt(*std::min_element(opt.begin(), opt.end()), 4)
                    + " mean=" + fmt(mean(opt), 4) + " max=" + fmt(*std::max_element(opt.begin(), opt.end()), 4)
                    + " (all runs in [560,750])"};
}

std::vector<double> overheads(const std::vector<RunLedger>& runs)
{
    std::vector<double> out;
    for (const auto& led : runs) {
        const auto s = seed_duplicate_overhead(led);
        out.push_back(s ? s->overhead : std::nan(""));
    }
    return out;
}

Verdict criterion_6()
{
    const auto det = overheads(builtin_runs("three_class_200"));
    auto cfg = builtin_scenario("three_class_200");
    cfg.piece_policy = PiecePolicy::random_tiebreak;
    const auto rnd = overheads(ledgers("three_class_200/random", cfg));
    cfg.piece_policy = PiecePolicy::index_order;
    const auto idx = overheads(ledgers("three_class_200/index", cfg));

    const bool in_range = std::all_of(det.begin(), det.end(), [](double o) { return o >= 0.08 && o <= 0.20; });
    const bool lower = mean(rnd) < mean(det);
    return {in_range && lower,
            "deterministic min=" + fmt(*std::min_element(det.begin(), det.end())) + " mean=" + fmt(mean(det))
                + " max=" + fmt(*std::max_element(det.begin(), det.end())) + " (want [0.08,0.20]); random_tiebreak mean="
                + fmt(mean(rnd)) + " (want lower); index_order mean=" + fmt(mean(idx)) + " (informational)"};
}

Verdict criterion_7()
{
    std::size_t good = 0, minutes = 0;
    for (const auto& led : builtin_runs("three_class_200")) {
        const auto dir = peer_directory(led);
        double first_fast = dir.end_time;
        for (PeerId id : dir.members("fast"))
            first_fast = std::min(first_fast, dir.left_at(id));
        for (const auto& p : upload_utilization(led))
            if (p.start >= 180.0 && p.start + p.length <= first_fast && p.length == 60.0) {
                ++minutes;
                good += p.ratio >= 0.8 ? 1 : 0;
            }
    }
    const double share = minutes ? static_cast<double>(good) / static_cast<double>(minutes) : 0.0;

    std::vector<double> slow_seed;
    for (const auto& led : builtin_runs("three_class_20"))
        for (const auto& p : upload_utilization(led))
            slow_seed.push_back(p.ratio);
    const double m = mean(slow_seed);
    return {share >= 0.7 && m <= 0.5, "three_class_200 share of minutes >=0.8: " + fmt(share) + " over "
                                          + std::to_string(minutes) + " full minutes (want >=0.7); three_class_20 mean=" + fmt(m) + " (want <=0.5)"};
}

Verdict criterion_8()
{
    std::vector<double> cvs;
    for (const auto& led : builtin_runs("three_class_200")) {
        std::vector<double> d;
        for (const auto& [id, s] : seed_unchoke_durations(led, 0.0, all_connected_until(led)))
            d.push_back(s);
        cvs.push_back(coefficient_of_variation(d));
    }
    const double cv = mean(cvs);

    auto cfg = builtin_scenario("three_class_200");
    cfg.seed_algorithm = SeedAlgorithm::legacy;
    std::vector<double> fast, slow;
    for (const auto& led : ledgers("three_class_200/legacy", cfg)) {
        const auto dir = peer_directory(led);
        for (const auto& [id, s] : seed_unchoke_durations(led, 0.0, all_connected_until(led))) {
            if (dir.class_of.at(id) == "fast")
                fast.push_back(s);
            else if (dir.class_of.at(id) == "slow")
                slow.push_back(s);
        }
    }
    const double ratio = mean(fast) / mean(slow);
    return {cv <= 0.5 && ratio >= 2.0,
            "modified seed cv=" + fmt(cv) + " (want <=0.5); legacy fast/slow seed time=" + fmt(ratio) + " (want >=2)"};
}

Verdict criterion_9()
{
    Rng gen(9001);
    auto unit = [&] { return uniform_unit(gen); };
    std::size_t mismatches = 0;
    std::string first;
    auto fail = [&](std::size_t i, const std::string& what) {
        if (mismatches++ == 0)
            first = "case " + std::to_string(i) + ": " + what;
    };
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto m = 1 + uniform_index(gen, 12);
        const double now = 100.0 + std::floor(unit() * 1000.0);
        std::vector<ChokeCandidate> remotes;
        for (std::size_t k = 0; k < m; ++k) {
            ChokeCandidate c;
            c.id = static_cast<PeerId>(k + 1);
            c.interested = unit() < 0.7;
            c.snubbed = unit() < 0.15;
            c.rate = unit() * 1e5 + static_cast<double>(k) * 1e-3; // distinct
            c.unchoked = unit() < 0.5;
            c.unchoked_since = now - static_cast<double>(k) - 40.0 * std::floor(unit() * 2.0) - unit() * 0.5;
            c.pending_requests = unit() < 0.5;
            c.optimistic_allowed = unit() < 0.9;
            c.similar_capacity = unit() < 0.4;
            remotes.push_back(c);
        }
        const auto n = static_cast<std::int32_t>(1 + uniform_index(gen, 6));

        // Leecher round, optimistic or carry-over.
        const bool optimistic = unit() < 0.5;
        const bool prefer = unit() < 0.5;
        std::vector<PeerId> previous;
        for (const auto& c : remotes)
            if (unit() < 0.3)
                previous.push_back(c.id);
        Rng impl_rng(i);
        const auto d = leecher_rechoke(remotes, {n, optimistic, prefer, previous}, impl_rng);
        const auto regular = oracle::leecher_regular(remotes, n, true);
        if (std::set<PeerId>(d.regular.begin(), d.regular.end()) != regular || d.regular.size() != regular.size())
            fail(i, "leecher regular set differs");
        if (optimistic) {
            if (const auto why = oracle::check_optimistic_draw(remotes, regular, d.optimistic, prefer); !why.empty())
                fail(i, "leecher optimistic draw: " + why);
        }
        else if (d.optimistic != oracle::replay_optimistic(remotes, regular, previous))
            fail(i, "leecher carry-over differs");
        std::size_t interested_unchoked = 0;
        for (const auto& c : remotes)
            if (c.interested && d.unchokes(c.id))
                ++interested_unchoked;
        if (interested_unchoked > static_cast<std::size_t>(n))
            fail(i, "more than n interested remotes unchoked");

        // Modified seed round.
        const auto n_o = static_cast<std::int32_t>(uniform_index(gen, static_cast<std::size_t>(n) + 1));
        SeedRoundParams sp;
        sp.n_uploads = n;
        sp.optimistic_slots = n_o;
        sp.now = now;
        sp.fill_free_slots = unit() < 0.5;
        const auto s = seed_rechoke_modified(remotes, sp, impl_rng);
        const auto seed_regular = oracle::seed_regular(remotes, n, n_o, now, kSeedRecentUnchoke);
        if (std::set<PeerId>(s.regular.begin(), s.regular.end()) != seed_regular || s.regular.size() != seed_regular.size())
            fail(i, "seed regular set differs");
        std::set<PeerId> pool;
        for (const auto& c : remotes)
            if (c.interested && !c.unchoked)
                pool.insert(c.id);
        const std::size_t want = sp.fill_free_slots ? static_cast<std::size_t>(n) - seed_regular.size()
                                                    : static_cast<std::size_t>(n_o);
        const std::set<PeerId> drawn(s.optimistic.begin(), s.optimistic.end());
        if (drawn.size() != s.optimistic.size() || s.optimistic.size() != std::min(want, pool.size())
            || !std::includes(pool.begin(), pool.end(), drawn.begin(), drawn.end()))
            fail(i, "seed random unchokes differ");
    }
    return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 micro-states match" + (first.empty() ? "" : "; " + first)};
}

Verdict criterion_10()
{
    Rng gen(10010);
    double worst = 0.0;
    std::size_t certificate_failures = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        const auto peers = 2 + uniform_index(gen, 5);
        std::vector<std::pair<PeerId, PeerId>> all;
        for (PeerId u = 0; u < static_cast<PeerId>(peers); ++u)
            for (PeerId d = 0; d < static_cast<PeerId>(peers); ++d)
                if (u != d)
                    all.emplace_back(u, d);
        shuffle(std::span(all), gen);
        const auto count = 1 + uniform_index(gen, std::min<std::size_t>(10, all.size()));
        std::vector<Link> links;
        for (std::size_t k = 0; k < count; ++k)
            links.push_back({all[k].first, all[k].second});
        std::vector<double> up(peers), down;
        for (auto& c : up)
            c = 1.0 + uniform_unit(gen) * 300.0 * kKiB;
        if (i % 2 == 1) {
            down.resize(peers);
            for (auto& c : down)
                c = uniform_unit(gen) < 0.3 ? std::numeric_limits<double>::infinity() : 1.0 + uniform_unit(gen) * 300.0 * kKiB;
        }
        const auto got = allocate_bandwidth(links, up, down);
        const auto want = oracle::water_fill(links, up, down);
        for (std::size_t k = 0; k < links.size(); ++k)
            worst = std::max(worst, std::abs(got[k] - want[k]) / std::max(std::abs(want[k]), 1e-300));
        if (!oracle::check_bottlenecks(links, up, down, got, 1e-9).empty())
            ++certificate_failures;
    }
    return {worst <= 1e-9 && certificate_failures == 0,
            "max relative error=" + fmt(worst) + " over 1000 graphs, bottleneck failures=" + std::to_string(certificate_failures)};
}

Verdict criterion_11()
{
    bool same = true;
    for (const char* name : {"three_class_200", "two_class"}) {
        const auto cfg = builtin_scenario(name);
        same = same && run(cfg, 4242).to_csv() == run(cfg, 4242).to_csv();
    }
    return {same, same ? "ledger CSVs byte-identical across repeated runs" : "ledger CSVs differ"};
}

/// Per peer that optimistically unchoked `liar` while it was interested, for
/// at least one rechoke period each time, whether the flag came no later
/// than the end of the third such unchoke. Shorter unchokes can't be judged.
std::pair<bool, std::string> liar_caught(const RunLedger& led, PeerId liar)
{
    std::map<PeerId, bool> interested;
    std::map<PeerId, bool> stint_interested;
    std::map<PeerId, double> stint_start;
    std::map<PeerId, int> stints;
    std::map<PeerId, double> third_end, flagged;
    const auto dir = peer_directory(led);
    for (const auto& e : led.events()) {
        if (e.kind == EventKind::interest_change && e.from == liar)
            interested[e.to] = e.flag != 0;
        const bool opt = e.flag == static_cast<std::int32_t>(UnchokeKind::optimistic);
        if (e.kind == EventKind::unchoke_start && e.to == liar && opt) {
            stint_interested[e.from] = interested[e.from];
            stint_start[e.from] = e.time;
        }
        if (e.kind == EventKind::unchoke_end && e.to == liar && opt && stint_interested[e.from]
            && e.time - stint_start[e.from] >= kRechokePeriod)
            if (++stints[e.from] == 3)
                third_end[e.from] = e.time;
        if (e.kind == EventKind::liar_flagged && e.to == liar)
            flagged.try_emplace(e.from, e.time);
    }
    // The seed downloads nothing, so it has no reason to check capacities.
    for (const auto& [peer, end] : third_end)
        if (dir.class_of.contains(peer) && (!flagged.contains(peer) || flagged.at(peer) > end))
            return {false, "peer " + std::to_string(peer) + " gave 3 optimistic unchokes without flagging"};
    return {!flagged.empty(), std::to_string(flagged.size()) + " peers flagged it"};
}

Verdict criterion_12()
{
    auto mutual = [](const std::vector<RunLedger>& runs) {
        std::vector<double> t;
        for (const auto& led : runs)
            for (const auto& [id, time] : first_mutual_regular_unchoke(led, "fast"))
                t.push_back(time);
        return mean(t);
    };
    auto cfg = builtin_scenario("three_class_200");
    cfg.tracker_extension = true;
    const auto& on = ledgers("three_class_200/extension", cfg);
    const double t_off = mutual(builtin_runs("three_class_200"));
    const double t_on = mutual(on);

    std::size_t false_flags = 0;
    for (const auto& led : on)
        false_flags += liar_flags(led).size();

    const PeerId liar = 1; // a slow peer claiming 200 kB/s
    cfg.announce_multiplier[liar] = 10.0;
    bool caught = true;
    std::string why;
    for (const auto& led : ledgers("three_class_200/liar", cfg)) {
        for (const auto& f : liar_flags(led))
            if (f.liar != liar)
                ++false_flags;
        const auto [ok, detail] = liar_caught(led, liar);
        if (!ok && caught) {
            caught = false;
            why = detail;
        }
    }
    return {t_on < t_off && false_flags == 0 && caught,
            "first fast-fast mutual unchoke on=" + fmt(t_on, 4) + "s off=" + fmt(t_off, 4)
                + "s; truthful flags=" + std::to_string(false_flags) + "; liar caught=" + (caught ? "yes" : "no: " + why)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"swarmsim acceptance criteria"};
    std::vector<int> selected;
    g_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--criterion", selected, "criterion numbers to check (default: all)")->check(CLI::Range(1, 12));
    app.add_option("--jobs", g_jobs, "parallel runs")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Verdict()>> criteria{criterion_1, criterion_2, criterion_3,  criterion_4,
                                                         criterion_5, criterion_6, criterion_7,  criterion_8,
                                                         criterion_9, criterion_10, criterion_11, criterion_12};
    if (selected.empty())
        for (int i = 1; i <= 12; ++i)
            selected.push_back(i);

    int failed = 0;
    for (int n : selected) {
        Verdict v;
        try {
            v = criteria[static_cast<std::size_t>(n - 1)]();
        }
        catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
