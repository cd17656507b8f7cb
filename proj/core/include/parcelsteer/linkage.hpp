#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "parcelsteer/signal_metrics.hpp"

namespace parcelsteer {

/// One agglomeration. Items are clusters 0..n-1; step k creates cluster n+k.
/// `left` is the operand whose smallest member index is lower.
struct LinkageStep {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;  // members in the new cluster

    bool operator==(const LinkageStep&) const = default;
};

/// Complete-linkage agglomeration (cluster distance = max member distance).
/// Among pairs at equal minimal distance the pair whose (smaller, larger)
/// minimum-member indices is lexicographically smallest merges first; callers
/// order items by super-voxel id so this is the (min sv_id, max sv_id) rule.
std::vector<LinkageStep> complete_linkage(const DistanceMatrix& d);

/// Flat clusters after applying every step with distance <= t (t in [0, 2]).
/// Labels are 0..k-1 in order of each cluster's first item.
std::vector<int> cut_at_threshold(std::span<const LinkageStep> steps, std::size_t n, double t);

} // namespace parcelsteer
