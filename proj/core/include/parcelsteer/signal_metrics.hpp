#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace parcelsteer {

/// A BOLD course in arbitrary units. `source_count` is how many voxels (or
/// super-voxels) were averaged to produce it.
struct TimeCourse {
    std::vector<double> samples;
    int source_count = 1;

    std::size_t size() const noexcept { return samples.size(); }
};

struct Correlation {
    double r = 0.0;
    bool degenerate = false;  // at least one input had zero variance; r forced to 0
};

// All kernels accumulate in double. A course with zero variance makes the
// correlation undefined; `pearson_r` throws ZeroVariance, everything else
// maps it to r = 0 and raises a degeneracy flag.

double pearson_r(std::span<const double> x, std::span<const double> y);
double pearson_r(const TimeCourse& x, const TimeCourse& y);
Correlation correlate(std::span<const double> x, std::span<const double> y);

/// Dense symmetric correlation matrix with unit diagonal.
struct CorrelationMatrix {
    std::size_t n = 0;
    std::vector<double> r;                 // row-major n*n
    std::vector<std::uint8_t> degenerate;  // per item: zero-variance course

    double at(std::size_t i, std::size_t j) const noexcept { return r[i * n + j]; }
};

CorrelationMatrix correlation_matrix(std::span<const TimeCourse> tcs);

/// Condensed upper triangle of d(i,j) = 1 - r(i,j), row by row.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d;
    std::vector<std::uint8_t> degenerate;  // per item

    static std::size_t condensed_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
        if (i > j) std::swap(i, j);
        return n * i - i * (i + 1) / 2 + (j - i - 1);
    }
    double at(std::size_t i, std::size_t j) const noexcept {
        return i == j ? 0.0 : d[condensed_index(n, i, j)];
    }
};

DistanceMatrix distance_matrix(std::span<const TimeCourse> tcs);
/// Distance matrix over a subset of items, in the given order.
DistanceMatrix distance_matrix(const CorrelationMatrix& corr, std::span<const std::size_t> items);

struct Homogeneity {
    double value = 1.0;
    bool degenerate = false;
};

/// Mean Pearson r over all unordered pairs; 1.0 for a single member.
Homogeneity homogeneity(std::span<const TimeCourse> tcs);
/// Same quantity from precomputed correlations; bitwise equal to the
/// course-based overload when `items` lists the courses in the same order.
Homogeneity homogeneity(const CorrelationMatrix& corr, std::span<const std::size_t> items);

struct BandedTimeCourse {
    std::vector<double> mean;
    std::vector<double> se;
    int n_members = 0;
};

/// Per-timepoint unweighted mean over members and standard error sd/sqrt(n),
/// sd with the n-1 denominator (zero for a single member).
BandedTimeCourse mean_se(std::span<const TimeCourse> tcs);
BandedTimeCourse mean_se(std::span<const TimeCourse* const> tcs);
TimeCourse mean_course(std::span<const TimeCourse* const> tcs);

struct FCMatrix {
    std::vector<int> parcel_ids;
    CorrelationMatrix corr;

    std::size_t size() const noexcept { return parcel_ids.size(); }
    double at(std::size_t i, std::size_t j) const noexcept { return corr.at(i, j); }
};

FCMatrix fc_matrix(std::span<const int> parcel_ids, std::span<const TimeCourse> parcel_tcs);

struct Chord {
    std::size_t i = 0;
    std::size_t j = 0;
    double r = 0.0;
};

/// Off-diagonal pairs (i < j) with lo <= |r| <= hi, strongest first.
std::vector<Chord> fc_filter(const FCMatrix& m, double lo, double hi);

} // namespace parcelsteer
