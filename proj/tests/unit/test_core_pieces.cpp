#include "../oracles/bandwidth_oracle.hpp"

#include "swarmsim/bandwidth.hpp"
#include "swarmsim/core.hpp"
#include "swarmsim/pieces.hpp"
#include "swarmsim/tracker.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

using namespace swarmsim;

namespace {

Bitfield bits(std::int32_t n, std::initializer_list<PieceIndex> pieces)
{
    Bitfield b(n);
    for (auto p : pieces)
        b.add(p);
    return b;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

TEST(Bitfield, InterestingPieces)
{
    EXPECT_EQ(interesting_pieces(bits(6, {0, 1, 2}), bits(6, {})), (std::vector<PieceIndex>{0, 1, 2}));
    EXPECT_TRUE(interesting_pieces(bits(6, {0, 1}), bits(6, {0, 1, 2})).empty());
    EXPECT_EQ(interesting_pieces(bits(6, {0, 3, 5}), bits(6, {3, 4})), (std::vector<PieceIndex>{0, 5}));
    EXPECT_THROW(interesting_pieces(bits(6, {}), bits(5, {})), config_error);
}

TEST(Bitfield, AddIsIdempotent)
{
    Bitfield b(3);
    EXPECT_TRUE(b.add(1));
    EXPECT_FALSE(b.add(1));
    EXPECT_EQ(b.count(), 1);
    b.add(0);
    b.add(2);
    EXPECT_TRUE(b.complete());
}

TEST(Bandwidth, EqualSplitWithoutDownloadCaps)
{
    const std::vector<Link> four{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
    const std::vector<double> up{200 * kKiB, 0, 0, 0, 0};
    for (double r : allocate_bandwidth(four, up))
        EXPECT_DOUBLE_EQ(r, 50 * kKiB);

    const std::vector<Link> one{{0, 1}};
    const std::vector<double> up1{20 * kKiB, 0};
    EXPECT_DOUBLE_EQ(allocate_bandwidth(one, up1).at(0), 20 * kKiB);
    EXPECT_TRUE(allocate_bandwidth({}, up1).empty());
}

// A(0) and B(1) send to C(2), which can take 150; A also sends to D(3).
// Max-min fairness gives 50/100/50: A's share is set by its own cap.
TEST(Bandwidth, ProgressiveFillingExample)
{
    const std::vector<Link> links{{0, 2}, {1, 2}, {0, 3}};
    const std::vector<double> up{100, 100, 0, 0};
    const std::vector<double> down{kInf, kInf, 150, kInf};
    const auto r = allocate_bandwidth(links, up, down);
    EXPECT_NEAR(r[0], 50, 1e-9);
    EXPECT_NEAR(r[1], 100, 1e-9);
    EXPECT_NEAR(r[2], 50, 1e-9);

    const auto o = oracle::water_fill(links, up, down);
    for (std::size_t i = 0; i < r.size(); ++i)
        EXPECT_NEAR(r[i], o[i], 1e-9);
    EXPECT_EQ(oracle::check_bottlenecks(links, up, down, r, 1e-9), "");
}

TEST(Pieces, UniqueRarestWins)
{
    RarestSet rs(10);
    rs.on_have(3);
    for (int i = 0; i < 5; ++i)
        rs.on_have(7);
    Rng rng(1);
    const std::vector<bool> none(10, false);
    const auto up = bits(10, {3, 7});
    for (auto policy : {PiecePolicy::deterministic, PiecePolicy::random_tiebreak, PiecePolicy::index_order})
        EXPECT_EQ(select_piece(bits(10, {}), up, none, rs, policy, rng), 3);
}

TEST(Pieces, TiesByPolicy)
{
    const auto up = bits(10, {2, 4, 9});
    RarestSet rs(10, 77);
    rs.add_bitfield(up);
    rs.add_bitfield(up);
    const std::vector<bool> none(10, false);
    Rng rng(5);

    EXPECT_EQ(select_piece(bits(10, {}), up, none, rs, PiecePolicy::index_order, rng), 2);

    // Insertion order: the same set keeps answering the same piece.
    const auto first = select_piece(bits(10, {}), up, none, rs, PiecePolicy::deterministic, rng);
    ASSERT_TRUE(first);
    EXPECT_TRUE(*first == 2 || *first == 4 || *first == 9);
    for (int i = 0; i < 20; ++i)
        EXPECT_EQ(select_piece(bits(10, {}), up, none, rs, PiecePolicy::deterministic, rng), first);

    std::map<PieceIndex, int> hits;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        ++hits[*select_piece(bits(10, {}), up, none, rs, PiecePolicy::random_tiebreak, rng)];
    ASSERT_EQ(hits.size(), 3u);
    double chi2 = 0.0;
    for (const auto& [p, h] : hits) {
        const double e = draws / 3.0;
        chi2 += (h - e) * (h - e) / e;
    }
    EXPECT_LT(chi2, 13.82); // df = 2, p = 0.001
}

TEST(Pieces, SkipsHeldAndInFlight)
{
    RarestSet rs(4, 3);
    rs.add_bitfield(Bitfield(4, true));
    std::vector<bool> in_flight(4, false);
    in_flight[1] = true;
    Rng rng(2);
    EXPECT_EQ(select_piece(bits(4, {0, 2}), bits(4, {0, 1, 2, 3}), in_flight, rs, PiecePolicy::index_order, rng), 3);
    EXPECT_EQ(select_piece(bits(4, {0, 2, 3}), bits(4, {0, 1, 2, 3}), in_flight, rs, PiecePolicy::deterministic, rng),
              std::nullopt);
}

TEST(Pieces, ReplicaCountsMatchRecount)
{
    const std::int32_t n = 64;
    RarestSet rs(n, 11);
    Rng rng(42);
    std::vector<Bitfield> present;
    for (int step = 0; step < 400; ++step) {
        if (!present.empty() && uniform_index(rng, 3) == 0) {
            const auto i = uniform_index(rng, present.size());
            rs.remove_bitfield(present[i]);
            present.erase(present.begin() + static_cast<std::ptrdiff_t>(i));
        }
        else if (!present.empty() && uniform_index(rng, 2) == 0) {
            auto& b = present[uniform_index(rng, present.size())];
            const auto p = static_cast<PieceIndex>(uniform_index(rng, n));
            if (b.add(p))
                rs.on_have(p);
        }
        else {
            Bitfield b(n);
            for (PieceIndex p = 0; p < n; ++p)
                if (uniform_index(rng, 4) == 0)
                    b.add(p);
            rs.add_bitfield(b);
            present.push_back(b);
        }

        std::vector<std::int32_t> recount(n, 0);
        for (const auto& b : present)
            for (auto p : b.pieces())
                ++recount[static_cast<std::size_t>(p)];
        ASSERT_EQ(rs.counts(), recount) << "step " << step;

        std::size_t listed = 0;
        for (std::size_t c = 0; c < rs.buckets().size(); ++c)
            for (auto p : rs.buckets()[c]) {
                ASSERT_EQ(rs.count(p), static_cast<std::int32_t>(c));
                ++listed;
            }
        ASSERT_EQ(listed, static_cast<std::size_t>(n));
    }
}

TEST(Tracker, SmallSwarmGetsEveryone)
{
    Tracker t(80, false);
    for (PeerId p = 1; p <= 3; ++p)
        t.join(p, 0.0, 100.0);
    Rng rng(1);
    const auto set = t.announce(1, rng);
    ASSERT_EQ(set.size(), 2u);
    std::set<PeerId> ids;
    for (const auto& l : set) {
        ids.insert(l.id);
        EXPECT_FALSE(l.announced_cap) << "caps leak with the extension off";
    }
    EXPECT_EQ(ids, (std::set<PeerId>{2, 3}));
}

TEST(Tracker, CapsAttachedWithExtension)
{
    Tracker t(80, true);
    t.join(1, 0.0, 10.0);
    t.join(2, 0.0, 20.0);
    Rng rng(1);
    const auto set = t.announce(1, rng);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set[0].announced_cap, 20.0);
}

TEST(Tracker, LargeSwarmIsCappedAndUniform)
{
    Tracker t(80, false);
    for (PeerId p = 0; p < 120; ++p)
        t.join(p, 0.0);
    Rng rng(9);
    const int trials = 3000;
    std::vector<int> hits(120, 0);
    for (int i = 0; i < trials; ++i) {
        const auto set = t.announce(0, rng);
        ASSERT_EQ(set.size(), 80u);
        std::set<PeerId> ids;
        for (const auto& l : set)
            ids.insert(l.id);
        ASSERT_EQ(ids.size(), 80u);
        ASSERT_FALSE(ids.contains(0));
        for (auto id : ids)
            ++hits[static_cast<std::size_t>(id)];
    }
    const double p = 80.0 / 119.0;
    const double mu = trials * p;
    const double sigma = std::sqrt(trials * p * (1 - p));
    for (PeerId id = 1; id < 120; ++id)
        EXPECT_LT(std::abs(hits[static_cast<std::size_t>(id)] - mu), 3 * sigma) << "peer " << id;
}

TEST(Tracker, LeaveRemovesPeer)
{
    Tracker t;
    t.join(1, 0.0);
    t.join(2, 0.0);
    t.leave(2);
    Rng rng(1);
    EXPECT_TRUE(t.announce(1, rng).empty());
    EXPECT_FALSE(t.contains(2));
}
