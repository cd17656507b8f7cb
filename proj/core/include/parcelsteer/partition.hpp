#pragma once

#include <span>
#include <vector>

namespace parcelsteer {

/// Chance-corrected agreement between two flat labelings of the same items.
/// Returns 1.0 when both labelings put every item in one cluster or every
/// item in its own cluster (the index is otherwise 0/0).
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// True when every cluster of `fine` lies inside a single cluster of `coarse`.
bool refines(std::span<const int> fine, std::span<const int> coarse);

} // namespace parcelsteer
