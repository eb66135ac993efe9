#include "swarmsim/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace swarmsim {

namespace {

std::vector<double> equal_split(std::span<const Link> links, std::span<const double> upload_caps)
{
    std::vector<int> fanout(upload_caps.size(), 0);
    for (const auto& l : links)
        ++fanout.at(static_cast<std::size_t>(l.uploader));

    std::vector<double> rates;
    rates.reserve(links.size());
    for (const auto& l : links) {
        const auto u = static_cast<std::size_t>(l.uploader);
        rates.push_back(upload_caps[u] / fanout[u]);
    }
    return rates;
}

} // namespace

std::vector<double> allocate_bandwidth(std::span<const Link> links,
                                       std::span<const double> upload_caps,
                                       std::span<const double> download_caps)
{
    if (links.empty())
        return {};
    if (download_caps.empty())
        return equal_split(links, upload_caps);

    // Resources 0..U-1 are upload caps, U..U+D-1 download caps. Each round
    // raises every unfrozen link by the same amount until some resource runs
    // out, then freezes the links that cross it.
    const std::size_t nu = upload_caps.size();
    const std::size_t nd = download_caps.size();
    std::vector<double> remaining(nu + nd);
    std::copy(upload_caps.begin(), upload_caps.end(), remaining.begin());
    std::copy(download_caps.begin(), download_caps.end(), remaining.begin() + static_cast<std::ptrdiff_t>(nu));

    std::vector<double> rates(links.size(), 0.0);
    std::vector<bool> frozen(links.size(), false);
    std::size_t active = links.size();
    std::vector<int> users(nu + nd);

    while (active > 0) {
        std::fill(users.begin(), users.end(), 0);
        for (std::size_t i = 0; i < links.size(); ++i) {
            if (frozen[i])
                continue;
            ++users[static_cast<std::size_t>(links[i].uploader)];
            ++users[nu + static_cast<std::size_t>(links[i].downloader)];
        }

        double increment = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < users.size(); ++r)
            if (users[r] > 0 && std::isfinite(remaining[r]))
                increment = std::min(increment, remaining[r] / users[r]);
        // Every unfrozen link crosses a finite upload cap, so this can't stay infinite.
        increment = std::max(increment, 0.0);

        for (std::size_t i = 0; i < links.size(); ++i) {
            if (frozen[i])
                continue;
            rates[i] += increment;
            remaining[static_cast<std::size_t>(links[i].uploader)] -= increment;
            remaining[nu + static_cast<std::size_t>(links[i].downloader)] -= increment;
        }

        // A resource is saturated when what's left is within rounding of zero.
        auto saturated = [&](std::size_t r) {
            const double cap = r < nu ? upload_caps[r] : download_caps[r - nu];
            return std::isfinite(remaining[r]) && remaining[r] <= 1e-12 * std::max(cap, 1.0);
        };
        for (std::size_t i = 0; i < links.size(); ++i) {
            if (frozen[i])
                continue;
            if (saturated(static_cast<std::size_t>(links[i].uploader)) ||
                saturated(nu + static_cast<std::size_t>(links[i].downloader))) {
                frozen[i] = true;
                --active;
            }
        }
    }
    return rates;
}

} // namespace swarmsim
