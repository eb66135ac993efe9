#ifndef SWARMSIM_TESTS_BANDWIDTH_ORACLE_HPP
#define SWARMSIM_TESTS_BANDWIDTH_ORACLE_HPP

// Water filling by bisection: raise a common level for every unfrozen flow
// until some constraint would overflow, freeze the flows of the saturated
// constraints, repeat.

#include "swarmsim/bandwidth.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace oracle {

struct Constraint
{
    double cap = 0.0;
    std::vector<std::size_t> flows;
};

inline std::vector<Constraint> constraints_of(std::span<const swarmsim::Link> links,
                                              std::span<const double> up,
                                              std::span<const double> down)
{
    std::vector<Constraint> out;
    for (std::size_t p = 0; p < up.size(); ++p) {
        Constraint c{up[p], {}};
        for (std::size_t i = 0; i < links.size(); ++i)
            if (static_cast<std::size_t>(links[i].uploader) == p)
                c.flows.push_back(i);
        if (!c.flows.empty())
            out.push_back(c);
    }
    for (std::size_t p = 0; p < down.size(); ++p) {
        if (std::isinf(down[p]))
            continue;
        Constraint c{down[p], {}};
        for (std::size_t i = 0; i < links.size(); ++i)
            if (static_cast<std::size_t>(links[i].downloader) == p)
                c.flows.push_back(i);
        if (!c.flows.empty())
            out.push_back(c);
    }
    return out;
}

inline std::vector<double> water_fill(std::span<const swarmsim::Link> links,
                                      std::span<const double> up,
                                      std::span<const double> down)
{
    const auto cons = constraints_of(links, up, down);
    std::vector<double> rate(links.size(), 0.0);
    std::vector<bool> frozen(links.size(), false);
    double level = 0.0;
    for (std::size_t remaining = links.size(); remaining > 0;) {
        auto fits = [&](double t) {
            for (const auto& c : cons) {
                double used = 0.0;
                for (auto f : c.flows)
                    used += frozen[f] ? rate[f] : t;
                if (used > c.cap)
                    return false;
            }
            return true;
        };
        double lo = level;
        double hi = level + 1.0;
        while (fits(hi))
            hi = level + 2.0 * (hi - level);
        for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (fits(mid) ? lo : hi) = mid;
        }
        level = lo;
        bool froze = false;
        for (const auto& c : cons) {
            double used = 0.0;
            bool has_unfrozen = false;
            for (auto f : c.flows) {
                used += frozen[f] ? rate[f] : level;
                has_unfrozen = has_unfrozen || !frozen[f];
            }
            if (has_unfrozen && used >= c.cap * (1.0 - 1e-12)) {
                for (auto f : c.flows)
                    if (!frozen[f]) {
                        frozen[f] = true;
                        rate[f] = level;
                        --remaining;
                        froze = true;
                    }
            }
        }
        if (!froze)
            break;
    }
    return rate;
}

/// Max-min fairness certificate: every flow crosses a saturated constraint
/// in which no flow gets more than it does. Empty string when it holds.
inline std::string check_bottlenecks(std::span<const swarmsim::Link> links,
                                     std::span<const double> up,
                                     std::span<const double> down,
                                     const std::vector<double>& rate,
                                     double tol)
{
    const auto cons = constraints_of(links, up, down);
    for (const auto& c : cons) {
        double used = 0.0;
        for (auto f : c.flows)
            used += rate[f];
        if (used > c.cap * (1.0 + tol))
            return "constraint over capacity";
    }
    for (std::size_t i = 0; i < links.size(); ++i) {
        bool ok = false;
        for (const auto& c : cons) {
            bool member = false;
            double used = 0.0, top = 0.0;
            for (auto f : c.flows) {
                member = member || f == i;
                used += rate[f];
                top = std::max(top, rate[f]);
            }
            if (member && used >= c.cap * (1.0 - tol) && rate[i] >= top * (1.0 - tol))
                ok = true;
        }
        if (!ok)
            return "flow " + std::to_string(i) + " has no bottleneck";
    }
    return {};
}

} // namespace oracle

#endif
