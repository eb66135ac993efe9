#ifndef SWARMSIM_BANDWIDTH_HPP
#define SWARMSIM_BANDWIDTH_HPP

#include "swarmsim/core.hpp"

#include <span>
#include <vector>

namespace swarmsim {

/// The endpoints of one active transfer; the allocator doesn't care which piece.
struct Link
{
    PeerId uploader = 0;
    PeerId downloader = 0;
};

/**
 * Assigns a rate (bytes/s) to every link.
 *
 * Caps are indexed by PeerId. Without download caps (empty span) each
 * uploader's cap is split equally among its links. With download caps the
 * result is the max-min fair allocation over both constraint families,
 * computed by progressive filling; an infinite entry means "uncapped".
 */
std::vector<double> allocate_bandwidth(std::span<const Link> links,
                                       std::span<const double> upload_caps,
                                       std::span<const double> download_caps = {});

} // namespace swarmsim

#endif
