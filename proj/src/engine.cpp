#include "swarmsim/engine.hpp"

#include "swarmsim/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swarmsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Progress within this many bytes of the piece size counts as complete.
constexpr double kCompletionSlack = 1e-6;

void insert_sorted(std::vector<PeerId>& ids, PeerId id)
{
    ids.insert(std::lower_bound(ids.begin(), ids.end(), id), id);
}

void erase_sorted(std::vector<PeerId>& ids, PeerId id)
{
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it != ids.end() && *it == id)
        ids.erase(it);
}

} // namespace

Simulation::Simulation(const ScenarioConfig& config, std::uint64_t rng_seed)
    : config_(config)
    , rng_(rng_seed)
    , tracker_(config.max_peer_set, config.tracker_extension)
{
    config_.validate();
    const auto n = config_.leecher_count();
    const auto pieces = config_.content.num_pieces;
    seed_id_ = config_.resolved_seed_id();
    id_space_ = static_cast<std::size_t>(n) + 2;
    period_ticks_ = std::llround(kRechokePeriod / config_.tick_length);

    peers_.reserve(id_space_);
    peers_.emplace_back(0, Role::leecher, pieces, 0, config_.rate_window);
    peers_.front().connected = false;
    for (PeerId id = 1; id <= n + 1; ++id)
        peers_.emplace_back(id, id == seed_id_ ? Role::seed : Role::leecher, pieces, id_space_, config_.rate_window);

    upload_caps_.assign(id_space_, 0.0);
    bool any_download_cap = false;
    auto& seed = mut(seed_id_);
    seed.label = "seed";
    seed.upload_cap = config_.seed_cap;
    for (const auto& [id, cls] : config_.leecher_layout()) {
        auto& p = mut(id);
        p.label = cls->name;
        p.upload_cap = cls->upload_cap;
        p.download_cap = cls->download_cap;
        any_download_cap = any_download_cap || cls->download_cap.has_value();
    }
    if (any_download_cap)
        download_caps_.assign(id_space_, kInf);

    double min_cap = kInf;
    for (PeerId id = 1; id <= n + 1; ++id) {
        auto& p = mut(id);
        p.n_uploads = parallel_uploads_for(p.upload_cap, config_.n_uploads_override);
        p.phase_tick = static_cast<std::int32_t>(uniform_index(rng_, static_cast<std::size_t>(period_ticks_)));
        p.rarity = RarestSet(pieces, rng_());
        upload_caps_[static_cast<std::size_t>(id)] = p.upload_cap;
        if (any_download_cap && p.download_cap)
            download_caps_[static_cast<std::size_t>(id)] = *p.download_cap;
        min_cap = std::min(min_cap, p.upload_cap);
        ledger_.peer_join(0.0, id, p.label, p.upload_cap);
    }

    const double bound = static_cast<double>(config_.content.total_bytes()) / min_cap * std::max(n, 1);
    max_ticks_ = static_cast<std::int64_t>(std::ceil(bound / config_.tick_length)) + 10 * period_ticks_;

    flow_at_.assign(id_space_ * id_space_, -1);
    optimistic_since_.assign(id_space_ * id_space_, kInf);
    seed_sent_.assign(static_cast<std::size_t>(pieces), false);
    uploaded_.assign(id_space_, RateWindow(config_.rate_window));
    upload_busy_.assign(id_space_, RateWindow(config_.rate_window));
    leechers_left_ = n;

    // Flash crowd: the seed registers first, then every leecher in id order
    // announces once and connects to what the tracker hands back.
    auto announced = [&](PeerId id) -> std::optional<double> {
        if (!config_.tracker_extension)
            return std::nullopt;
        double cap = peer(id).upload_cap;
        if (const auto it = config_.announce_multiplier.find(id); it != config_.announce_multiplier.end())
            cap *= it->second;
        return cap;
    };
    std::vector<PeerId> join_order{seed_id_};
    for (PeerId id = 1; id <= n + 1; ++id)
        if (id != seed_id_)
            join_order.push_back(id);
    for (PeerId id : join_order) {
        tracker_.join(id, 0.0, announced(id));
        for (const auto& listing : tracker_.announce(id, rng_))
            connect(id, listing.id, announced(id), listing.announced_cap);
    }

    if (leechers_left_ == 0) {
        ledger_.run_end(0.0);
        finished_ = true;
    }
}

void Simulation::connect(PeerId a, PeerId b, std::optional<double> cap_of_a, std::optional<double> cap_of_b)
{
    auto& pa = mut(a);
    auto& pb = mut(b);
    if (pa.in_peer_set(b))
        return;
    const auto limit = static_cast<std::size_t>(config_.max_peer_set);
    if (pa.peer_set.size() >= limit || pb.peer_set.size() >= limit)
        return;

    ledger_.connect(0.0, a, b);
    for (auto [local, remote, remote_cap] : {std::tuple{&pa, &pb, cap_of_b}, std::tuple{&pb, &pa, cap_of_a}}) {
        auto& l = local->link(remote->id);
        l.connected = true;
        l.announced_cap = remote_cap;
        insert_sorted(local->peer_set, remote->id);
        local->rarity.add_bitfield(remote->bitfield);
        std::int32_t wanted = 0;
        for (PieceIndex i = 0; i < remote->bitfield.size(); ++i)
            if (remote->bitfield.has(i) && !local->bitfield.has(i))
                ++wanted;
        l.interesting = wanted;
    }
    if (pa.link(b).interesting > 0)
        set_interest(pa, pb, true, 0.0);
    if (pb.link(a).interesting > 0)
        set_interest(pb, pa, true, 0.0);
}

void Simulation::step()
{
    if (finished_)
        throw std::logic_error("step() on a finished simulation");
    const double start = now();
    run_rechokes(start);
    issue_requests();
    auto done = transfer(start, start + config_.tick_length);
    ++tick_;
    const double end = now();
    complete(done, end);

    if (leechers_left_ == 0) {
        ledger_.run_end(end);
        finished_ = true;
        return;
    }
    // Requests go out as soon as a piece lands, so the next rechoke sees them.
    issue_requests();
    check_progress_possible();
    if (tick_ >= max_ticks_)
        throw simulation_error("watchdog: run exceeded " + std::to_string(max_ticks_) + " ticks with "
                               + std::to_string(leechers_left_) + " leechers unfinished");
}

void Simulation::run_rechokes(double now)
{
    for (auto& p : peers_) {
        if (!p.connected)
            continue;
        const bool periodic = tick_ % period_ticks_ == p.phase_tick;
        if (!periodic && !p.rechoke_pending)
            continue;
        p.rechoke_pending = false;
        rechoke(p, now, periodic);
    }
}

void Simulation::rechoke(PeerRuntime& p, double now, bool periodic)
{
    if (config_.tracker_extension && !p.is_seed())
        check_announced_capacities(p, now);

    const auto candidates = p.choke_candidates(now, config_.tracker_extension && !p.is_seed());
    UnchokeDecision decision;
    if (p.is_seed() && config_.seed_algorithm == SeedAlgorithm::modified) {
        SeedRoundParams params;
        params.n_uploads = p.n_uploads;
        params.optimistic_slots = periodic ? seed_optimistic_schedule(p.n_uploads)[static_cast<std::size_t>(p.periodic_rounds % 3)] : 0;
        params.now = now;
        decision = seed_rechoke_modified(candidates, params, rng_);
    }
    else {
        LeecherRoundParams params;
        params.n_uploads = p.n_uploads;
        params.optimistic_round = p.round_counter % 3 == 0;
        params.prefer_similar = config_.tracker_extension && !p.is_seed();
        params.previous_optimistic = p.optimistic_order;
        decision = p.is_seed() ? seed_rechoke_legacy(candidates, params, rng_)
                               : leecher_rechoke(candidates, params, rng_);
        p.optimistic_order = decision.optimistic;
    }
    ++p.round_counter;
    if (periodic)
        ++p.periodic_rounds;
    apply_decision(p, decision, now);
}

std::optional<double> Simulation::observed_upload_rate(PeerId id, double now) const
{
    // Needs a full rechoke period of uploading in the window; shorter spans
    // are dominated by the tail of a piece that finished mid-tick.
    const auto& busy = upload_busy_[static_cast<std::size_t>(id)];
    const double busy_seconds = busy.rate(now) * busy.length();
    if (busy_seconds < kRechokePeriod)
        return std::nullopt;
    return uploaded_[static_cast<std::size_t>(id)].rate(now) * busy.length() / busy_seconds;
}

void Simulation::check_announced_capacities(PeerRuntime& p, double now)
{
    for (PeerId r : p.peer_set) {
        auto& l = p.link(r);
        if (!l.unchoke.active || l.unchoke.kind != UnchokeKind::optimistic || !l.announced_cap)
            continue;
        auto& since = optimistic_since_[pair(p.id, r)];
        if (since > now - kRechokePeriod)
            continue; // too fresh to judge, or already judged this stint
        const auto observed = observed_upload_rate(r, now);
        if (!observed)
            continue;
        since = kInf;
        const auto verdict = verify_announced_capacity(*observed, *l.announced_cap, config_.liar_threshold, now,
                                                       config_.liar_cooldown);
        if (verdict.liar) {
            l.cooldown_until = verdict.cooldown_until;
            ledger_.liar_flagged(now, p.id, r);
        }
    }
}

void Simulation::apply_decision(PeerRuntime& p, const UnchokeDecision& d, double now)
{
    for (PeerId r : p.peer_set) {
        auto& slot = p.link(r).unchoke;
        const auto kind = d.kind_of(r);
        if (slot.active && (!kind || *kind != slot.kind)) {
            ledger_.unchoke_end(now, p.id, r, slot.kind);
            if (!kind) {
                slot.active = false;
                mut(r).link(p.id).unchoked_by_remote = false;
                cancel_flow(p.id, r);
            }
        }
        if (kind && (!slot.active || *kind != slot.kind)) {
            ledger_.unchoke_start(now, p.id, r, *kind);
            if (!slot.active) {
                slot.since = now;
                p.link(r).last_unchoke_msg_sent = now;
                mut(r).link(p.id).unchoked_by_remote = true;
            }
            slot.active = true;
            slot.kind = *kind;
            if (*kind == UnchokeKind::optimistic)
                optimistic_since_[pair(p.id, r)] = now;
        }
    }
}

void Simulation::issue_requests()
{
    for (auto& d : peers_) {
        if (!d.connected || d.is_seed())
            continue;
        for (PeerId u : d.peer_set) {
            const auto& l = d.link(u);
            if (!l.unchoked_by_remote || !l.interested || flow_at_[pair(u, d.id)] >= 0)
                continue;
            auto& up = mut(u);
            const auto piece = select_piece(d.bitfield, up.bitfield, d.in_flight, d.rarity, config_.piece_policy, rng_);
            if (!piece)
                continue;
            flow_at_[pair(u, d.id)] = static_cast<std::int32_t>(flows_.size());
            flows_.push_back({u, d.id, *piece, 0.0});
            d.in_flight[static_cast<std::size_t>(*piece)] = true;
            up.link(d.id).remote_requesting = true;
        }
    }
}

std::vector<Simulation::Completed> Simulation::transfer(double now, double end)
{
    std::vector<Completed> done;
    if (flows_.empty())
        return done;

    std::vector<Link> links;
    links.reserve(flows_.size());
    for (const auto& f : flows_)
        links.push_back({f.uploader, f.downloader});
    const auto rates = allocate_bandwidth(links, upload_caps_, download_caps_);

    const double piece_size = static_cast<double>(config_.content.piece_size);
    std::vector<bool> busy(id_space_, false);
    for (std::size_t i = 0; i < flows_.size(); ++i) {
        auto& f = flows_[i];
        f.rate = rates[i];
        auto& d = mut(f.downloader);
        auto& u = mut(f.uploader);
        double& progress = d.partial[static_cast<std::size_t>(f.piece)];
        const double before = progress;
        double after = before + f.rate * config_.tick_length;
        if (after >= piece_size - kCompletionSlack)
            after = piece_size;
        progress = after;
        busy[static_cast<std::size_t>(f.uploader)] = true;

        const auto bytes = static_cast<std::int64_t>(std::floor(after)) - static_cast<std::int64_t>(std::floor(before));
        if (bytes > 0) {
            const auto b = static_cast<double>(bytes);
            ledger_.bytes_transferred(now, f.uploader, f.downloader, f.piece, bytes);
            auto& dl = d.link(f.uploader);
            dl.received.record(end, b);
            dl.last_data_received = end;
            u.link(f.downloader).sent.record(end, b);
            uploaded_[static_cast<std::size_t>(f.uploader)].record(end, b);
        }
        if (after == piece_size)
            done.push_back({f.uploader, f.downloader, f.piece});
    }
    for (std::size_t id = 0; id < id_space_; ++id)
        if (busy[id])
            upload_busy_[id].record(end, config_.tick_length);
    return done;
}

void Simulation::complete(const std::vector<Completed>& done, double t)
{
    std::vector<PeerId> finished;
    for (const auto& c : done) {
        cancel_flow(c.uploader, c.downloader);
        auto& d = mut(c.downloader);
        d.bitfield.add(c.piece);
        d.rarity.drop(c.piece);
        ledger_.piece_complete(t, d.id, c.piece);
        if (c.uploader == seed_id_) {
            auto sent = seed_sent_[static_cast<std::size_t>(c.piece)];
            ledger_.seed_piece_sent(t, c.uploader, d.id, c.piece, !sent);
            seed_sent_[static_cast<std::size_t>(c.piece)] = true;
        }
        announce_have(d, c.piece, t);
        if (d.bitfield.complete())
            finished.push_back(d.id);
    }
    for (PeerId id : finished)
        depart(mut(id), t);
}

void Simulation::announce_have(PeerRuntime& d, PieceIndex piece, double t)
{
    for (PeerId r : d.peer_set) {
        auto& remote = mut(r);
        remote.rarity.on_have(piece);
        if (remote.bitfield.has(piece)) {
            if (--d.link(r).interesting == 0)
                set_interest(d, remote, false, t);
        }
        else if (++remote.link(d.id).interesting == 1) {
            set_interest(remote, d, true, t);
        }
    }
}

void Simulation::set_interest(PeerRuntime& a, PeerRuntime& b, bool value, double t)
{
    a.link(b.id).interested = value;
    b.link(a.id).remote_interested = value;
    ledger_.interest_change(t, a.id, b.id, value);
    if (b.link(a.id).unchoke.active)
        b.rechoke_pending = true;
}

void Simulation::cancel_flow(PeerId uploader, PeerId downloader)
{
    auto& slot = flow_at_[pair(uploader, downloader)];
    if (slot < 0)
        return;
    const auto index = static_cast<std::size_t>(slot);
    auto& d = mut(downloader);
    d.in_flight[static_cast<std::size_t>(flows_[index].piece)] = false;
    mut(uploader).link(downloader).remote_requesting = false;
    slot = -1;
    if (index + 1 != flows_.size()) {
        flows_[index] = flows_.back();
        flow_at_[pair(flows_[index].uploader, flows_[index].downloader)] = static_cast<std::int32_t>(index);
    }
    flows_.pop_back();
}

void Simulation::depart(PeerRuntime& d, double t)
{
    ledger_.peer_done(t, d.id);
    d.connected = false;
    --leechers_left_;

    for (PeerId r : std::vector<PeerId>(d.peer_set)) {
        auto& remote = mut(r);
        cancel_flow(d.id, r);
        cancel_flow(r, d.id);

        auto& mine = d.link(r);
        if (mine.unchoke.active) {
            ledger_.unchoke_end(t, d.id, r, mine.unchoke.kind);
            mine.unchoke.active = false;
        }
        auto& theirs = remote.link(d.id);
        if (theirs.unchoke.active) {
            ledger_.unchoke_end(t, r, d.id, theirs.unchoke.kind);
            if (theirs.remote_interested)
                remote.rechoke_pending = true;
        }
        if (theirs.interested)
            ledger_.interest_change(t, r, d.id, false);
        if (mine.interested)
            ledger_.interest_change(t, d.id, r, false);

        remote.rarity.remove_bitfield(d.bitfield);
        RemoteLink blank;
        blank.received = RateWindow(config_.rate_window);
        blank.sent = RateWindow(config_.rate_window);
        theirs = blank;
        mine = blank;
        erase_sorted(remote.peer_set, d.id);
        std::erase(remote.optimistic_order, d.id);
    }
    d.peer_set.clear();
    d.optimistic_order.clear();
    tracker_.leave(d.id);
}

void Simulation::check_progress_possible() const
{
    if (!flows_.empty())
        return;
    for (const auto& p : peers_) {
        if (!p.connected || p.is_seed())
            continue;
        for (PeerId r : p.peer_set)
            if (p.link(r).interested)
                return;
    }
    throw simulation_error("stalled at t=" + format_number(now()) + ": no transfers and no leecher is interested in any peer");
}

RunLedger run(const ScenarioConfig& config, std::uint64_t rng_seed)
{
    Simulation sim(config, rng_seed);
    while (!sim.finished())
        sim.step();
    return sim.take_ledger();
}

} // namespace swarmsim
