#include "swarmsim/scenario.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace swarmsim {

std::int32_t ScenarioConfig::leecher_count() const
{
    std::int32_t n = 0;
    for (const auto& c : classes)
        n += c.count;
    return n;
}

PeerId ScenarioConfig::resolved_seed_id() const
{
    return seed_id.value_or(leecher_count() + 1);
}

std::vector<std::pair<PeerId, const ClassSpec*>> ScenarioConfig::leecher_layout() const
{
    std::vector<std::pair<PeerId, const ClassSpec*>> out;
    const PeerId seed = resolved_seed_id();
    PeerId next = 1;
    for (const auto& c : classes) {
        for (std::int32_t i = 0; i < c.count; ++i) {
            if (next == seed)
                ++next;
            out.emplace_back(next++, &c);
        }
    }
    return out;
}

void ScenarioConfig::validate() const
{
    content.validate();
    if (classes.empty())
        throw config_error("scenario needs at least one class");
    for (const auto& c : classes) {
        c.validate();
        if (c.name == "seed")
            throw config_error("class name 'seed' is reserved for the initial seed");
    }
    if (!(seed_cap > 0.0))
        throw config_error("seed_cap must be positive");
    if (runs < 1)
        throw config_error("runs must be at least 1");
    if (max_peer_set < 1)
        throw config_error("max_peer_set must be at least 1");
    if (!(tick_length > 0.0))
        throw config_error("tick_length must be positive");
    const double per_period = 10.0 / tick_length;
    if (std::abs(per_period - std::round(per_period)) > 1e-9)
        throw config_error("tick_length must divide the 10 s rechoke period");
    if (!(rate_window > 0.0))
        throw config_error("rate_window must be positive");
    if (n_uploads_override && *n_uploads_override < 1)
        throw config_error("n_uploads_override must be at least 1");
    const PeerId last = leecher_count() + 1;
    if (seed_id && (*seed_id < 1 || *seed_id > last))
        throw config_error("seed_id must lie in 1.." + std::to_string(last));
    for (const auto& [peer, mult] : announce_multiplier) {
        if (peer < 1 || peer > last)
            throw config_error("announce_multiplier names unknown peer " + std::to_string(peer));
        if (!(mult > 0.0))
            throw config_error("announce_multiplier must be positive");
    }
    if (!(liar_threshold >= 0.0) || !(liar_cooldown >= 0.0))
        throw config_error("liar threshold and cooldown must be non-negative");
}

std::string_view to_string(SeedAlgorithm algorithm)
{
    return algorithm == SeedAlgorithm::modified ? "modified" : "legacy";
}

std::string_view to_string(PiecePolicy policy)
{
    switch (policy) {
    case PiecePolicy::deterministic:
        return "deterministic";
    case PiecePolicy::random_tiebreak:
        return "random_tiebreak";
    case PiecePolicy::index_order:
        break;
    }
    return "index_order";
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view s)
{
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos)
            break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw config_error("scenario line " + std::to_string(line) + ": " + what);
}

double to_double(std::string_view s, std::size_t line)
{
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(line, "expected a number, got '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int to_int(std::string_view s, std::size_t line)
{
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(line, "expected an integer, got '" + std::string(s) + "'");
    return v;
}

template <typename Int>
std::optional<Int> to_optional_int(std::string_view s, std::size_t line)
{
    if (s == "none")
        return std::nullopt;
    return to_int<Int>(s, line);
}

bool to_switch(std::string_view s, std::size_t line)
{
    if (s == "on" || s == "true" || s == "1")
        return true;
    if (s == "off" || s == "false" || s == "0")
        return false;
    fail(line, "expected on/off, got '" + std::string(s) + "'");
}

} // namespace

ScenarioConfig parse_scenario(std::istream& in)
{
    ScenarioConfig cfg;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(line_no, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "name")
            cfg.name = std::string(value);
        else if (key == "num_pieces")
            cfg.content.num_pieces = to_int<std::int32_t>(value, line_no);
        else if (key == "piece_size")
            cfg.content.piece_size = to_int<std::int64_t>(value, line_no);
        else if (key == "class") {
            const auto parts = split_commas(value);
            if (parts.size() != 3 && parts.size() != 4)
                fail(line_no, "class needs name,count,upload_kBps[,download_kBps]");
            ClassSpec c;
            c.name = std::string(parts[0]);
            c.count = to_int<std::int32_t>(parts[1], line_no);
            c.upload_cap = to_double(parts[2], line_no) * kKiB;
            if (parts.size() == 4)
                c.download_cap = to_double(parts[3], line_no) * kKiB;
            cfg.classes.push_back(std::move(c));
        }
        else if (key == "seed_cap")
            cfg.seed_cap = to_double(value, line_no) * kKiB;
        else if (key == "seed_id")
            cfg.seed_id = to_optional_int<PeerId>(value, line_no);
        else if (key == "seed_algorithm") {
            if (value == "modified")
                cfg.seed_algorithm = SeedAlgorithm::modified;
            else if (value == "legacy")
                cfg.seed_algorithm = SeedAlgorithm::legacy;
            else
                fail(line_no, "seed_algorithm must be modified or legacy");
        }
        else if (key == "n_uploads_override")
            cfg.n_uploads_override = to_optional_int<std::int32_t>(value, line_no);
        else if (key == "piece_policy") {
            if (value == "deterministic")
                cfg.piece_policy = PiecePolicy::deterministic;
            else if (value == "random_tiebreak")
                cfg.piece_policy = PiecePolicy::random_tiebreak;
            else if (value == "index_order")
                cfg.piece_policy = PiecePolicy::index_order;
            else
                fail(line_no, "piece_policy must be deterministic, random_tiebreak or index_order");
        }
        else if (key == "tracker_extension")
            cfg.tracker_extension = to_switch(value, line_no);
        else if (key == "announce_multiplier") {
            const auto parts = split_commas(value);
            if (parts.size() != 2)
                fail(line_no, "announce_multiplier needs peer,multiplier");
            cfg.announce_multiplier[to_int<PeerId>(parts[0], line_no)] = to_double(parts[1], line_no);
        }
        else if (key == "max_peer_set")
            cfg.max_peer_set = to_int<std::int32_t>(value, line_no);
        else if (key == "tick_length")
            cfg.tick_length = to_double(value, line_no);
        else if (key == "rate_window")
            cfg.rate_window = to_double(value, line_no);
        else if (key == "liar_threshold")
            cfg.liar_threshold = to_double(value, line_no);
        else if (key == "liar_cooldown")
            cfg.liar_cooldown = to_double(value, line_no);
        else if (key == "runs")
            cfg.runs = to_int<std::int32_t>(value, line_no);
        else if (key == "rng_seed")
            cfg.rng_seed = to_int<std::uint64_t>(value, line_no);
        else
            fail(line_no, "unknown key '" + std::string(key) + "'");
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig parse_scenario(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse_scenario(in);
}

std::string serialize_scenario(const ScenarioConfig& cfg)
{
    std::ostringstream out;
    out << "name = " << cfg.name << '\n';
    out << "num_pieces = " << cfg.content.num_pieces << '\n';
    out << "piece_size = " << cfg.content.piece_size << '\n';
    for (const auto& c : cfg.classes) {
        out << "class = " << c.name << ',' << c.count << ',' << format_number(c.upload_cap / kKiB);
        if (c.download_cap)
            out << ',' << format_number(*c.download_cap / kKiB);
        out << '\n';
    }
    out << "seed_cap = " << format_number(cfg.seed_cap / kKiB) << '\n';
    out << "seed_id = " << (cfg.seed_id ? std::to_string(*cfg.seed_id) : "none") << '\n';
    out << "seed_algorithm = " << to_string(cfg.seed_algorithm) << '\n';
    out << "n_uploads_override = "
        << (cfg.n_uploads_override ? std::to_string(*cfg.n_uploads_override) : "none") << '\n';
    out << "piece_policy = " << to_string(cfg.piece_policy) << '\n';
    out << "tracker_extension = " << (cfg.tracker_extension ? "on" : "off") << '\n';
    for (const auto& [peer, mult] : cfg.announce_multiplier)
        out << "announce_multiplier = " << peer << ',' << format_number(mult) << '\n';
    out << "max_peer_set = " << cfg.max_peer_set << '\n';
    out << "tick_length = " << format_number(cfg.tick_length) << '\n';
    out << "rate_window = " << format_number(cfg.rate_window) << '\n';
    out << "liar_threshold = " << format_number(cfg.liar_threshold) << '\n';
    out << "liar_cooldown = " << format_number(cfg.liar_cooldown) << '\n';
    out << "runs = " << cfg.runs << '\n';
    out << "rng_seed = " << cfg.rng_seed << '\n';
    return std::move(out).str();
}

std::vector<std::string> builtin_scenario_names()
{
    return {"two_class", "three_class_200", "three_class_100", "three_class_20", "uniform_increase"};
}

namespace {

ScenarioConfig three_class(std::string name, std::int32_t slow, double seed_kbps, std::optional<PeerId> seed_id, std::int32_t runs)
{
    ScenarioConfig cfg;
    cfg.name = std::move(name);
    cfg.classes = {
        {"slow", slow, 20 * kKiB, std::nullopt},
        {"medium", 14, 50 * kKiB, std::nullopt},
        {"fast", 13, 200 * kKiB, std::nullopt},
    };
    cfg.seed_cap = seed_kbps * kKiB;
    cfg.seed_id = seed_id;
    cfg.runs = runs;
    return cfg;
}

} // namespace

ScenarioConfig builtin_scenario(std::string_view name)
{
    ScenarioConfig cfg;
    if (name == "three_class_200")
        cfg = three_class("three_class_200", 13, 200, std::nullopt, 13);
    else if (name == "three_class_100")
        cfg = three_class("three_class_100", 12, 100, 27, 8);
    else if (name == "three_class_20")
        cfg = three_class("three_class_20", 12, 20, 27, 8);
    else if (name == "two_class") {
        // "Similar numbers" of slow and fast peers; 20 + 20 is our choice.
        cfg.name = "two_class";
        cfg.classes = {
            {"slow", 20, 20 * kKiB, std::nullopt},
            {"fast", 20, 200 * kKiB, std::nullopt},
        };
        cfg.seed_cap = 200 * kKiB;
        cfg.runs = 13;
    }
    else if (name == "uniform_increase") {
        cfg.name = "uniform_increase";
        for (int i = 0; i < 40; ++i) {
            const int kbps = 20 + 5 * i;
            cfg.classes.push_back({"u" + std::to_string(kbps), 1, kbps * kKiB, std::nullopt});
        }
        cfg.seed_cap = 200 * kKiB;
        cfg.runs = 13;
    }
    else
        throw config_error("unknown builtin scenario '" + std::string(name) + "'");
    cfg.validate();
    return cfg;
}

} // namespace swarmsim
