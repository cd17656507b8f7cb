#include "parcelsteer/signal_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"
#include "parcelsteer/errors.hpp"

namespace parcelsteer {

namespace {

struct Centered {
    std::vector<double> values;
    double ss = 0.0;  // sum of squared deviations
};

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    // Four independent partial sums in a fixed order: deterministic, and
    // dot(a, b) == dot(b, a) bit for bit.
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

Centered center(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / static_cast<double>(x.size());
    Centered c;
    c.values.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c.values[i] = x[i] - mean;
    c.ss = dot(c.values, c.values);
    return c;
}

Correlation correlate_centered(const Centered& a, const Centered& b) noexcept {
    if (a.ss == 0.0 || b.ss == 0.0) return {0.0, true};
    const double r = dot(a.values, b.values) / std::sqrt(a.ss * b.ss);
    return {std::clamp(r, -1.0, 1.0), false};
}

void require_lengths(std::size_t a, std::size_t b) {
    if (a != b)
        throw Error(ErrorKind::LengthMismatch, "time courses differ in length", std::to_string(a) + " vs " + std::to_string(b));
    if (a < 2) throw Error(ErrorKind::TooFewItems, "time course needs at least 2 samples");
}

std::size_t common_length(std::span<const TimeCourse> tcs) {
    const std::size_t len = tcs.front().size();
    for (const auto& tc : tcs) require_lengths(len, tc.size());
    return len;
}

std::vector<Centered> center_all(std::span<const TimeCourse> tcs) {
    std::vector<Centered> out(tcs.size());
    detail::parallel_for(tcs.size(), [&](std::size_t i) { out[i] = center(tcs[i].samples); });
    return out;
}

} // namespace

Correlation correlate(std::span<const double> x, std::span<const double> y) {
    require_lengths(x.size(), y.size());
    return correlate_centered(center(x), center(y));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    const Correlation c = correlate(x, y);
    if (c.degenerate) throw Error(ErrorKind::ZeroVariance, "correlation undefined for a constant time course");
    return c.r;
}

double pearson_r(const TimeCourse& x, const TimeCourse& y) { return pearson_r(x.samples, y.samples); }

CorrelationMatrix correlation_matrix(std::span<const TimeCourse> tcs) {
    CorrelationMatrix m;
    m.n = tcs.size();
    if (m.n == 0) return m;
    common_length(tcs);
    const auto centered = center_all(tcs);
    m.r.assign(m.n * m.n, 0.0);
    m.degenerate.resize(m.n);
    for (std::size_t i = 0; i < m.n; ++i) m.degenerate[i] = centered[i].ss == 0.0;
    detail::parallel_for(m.n, [&](std::size_t i) {
        m.r[i * m.n + i] = 1.0;
        for (std::size_t j = i + 1; j < m.n; ++j) m.r[i * m.n + j] = correlate_centered(centered[i], centered[j]).r;
    }, 4);
    for (std::size_t i = 0; i < m.n; ++i)
        for (std::size_t j = i + 1; j < m.n; ++j) m.r[j * m.n + i] = m.r[i * m.n + j];
    return m;
}

DistanceMatrix distance_matrix(std::span<const TimeCourse> tcs) {
    if (tcs.size() < 2) throw Error(ErrorKind::TooFewItems, "distance matrix needs at least 2 time courses");
    const CorrelationMatrix corr = correlation_matrix(tcs);
    std::vector<std::size_t> all(corr.n);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return distance_matrix(corr, all);
}

DistanceMatrix distance_matrix(const CorrelationMatrix& corr, std::span<const std::size_t> items) {
    DistanceMatrix dm;
    dm.n = items.size();
    dm.d.reserve(dm.n < 2 ? 0 : dm.n * (dm.n - 1) / 2);
    dm.degenerate.resize(dm.n);
    for (std::size_t i = 0; i < dm.n; ++i) {
        dm.degenerate[i] = corr.degenerate[items[i]];
        for (std::size_t j = i + 1; j < dm.n; ++j) dm.d.push_back(1.0 - corr.at(items[i], items[j]));
    }
    return dm;
}

Homogeneity homogeneity(std::span<const TimeCourse> tcs) {
    if (tcs.empty()) throw Error(ErrorKind::TooFewItems, "homogeneity needs at least one time course");
    if (tcs.size() == 1) return {1.0, false};
    common_length(tcs);
    const auto centered = center_all(tcs);
    double sum = 0.0;
    bool degenerate = false;
    for (std::size_t i = 0; i < centered.size(); ++i) {
        for (std::size_t j = i + 1; j < centered.size(); ++j) {
            const Correlation c = correlate_centered(centered[i], centered[j]);
            sum += c.r;
            degenerate = degenerate || c.degenerate;
        }
    }
    const double pairs = static_cast<double>(centered.size() * (centered.size() - 1) / 2);
    return {sum / pairs, degenerate};
}

Homogeneity homogeneity(const CorrelationMatrix& corr, std::span<const std::size_t> items) {
    if (items.empty()) throw Error(ErrorKind::TooFewItems, "homogeneity needs at least one time course");
    if (items.size() == 1) return {1.0, false};
    double sum = 0.0;
    bool degenerate = false;
    for (std::size_t i = 0; i < items.size(); ++i) {
        degenerate = degenerate || corr.degenerate[items[i]];
        const double* row = corr.r.data() + items[i] * corr.n;
        for (std::size_t j = i + 1; j < items.size(); ++j) sum += row[items[j]];
    }
    const double pairs = static_cast<double>(items.size() * (items.size() - 1) / 2);
    return {sum / pairs, degenerate};
}

TimeCourse mean_course(std::span<const TimeCourse* const> tcs) {
    if (tcs.empty()) throw Error(ErrorKind::TooFewItems, "mean needs at least one time course");
    const std::size_t len = tcs.front()->size();
    TimeCourse out;
    out.samples.assign(len, 0.0);
    out.source_count = static_cast<int>(tcs.size());
    for (const TimeCourse* tc : tcs) {
        require_lengths(len, tc->size());
        for (std::size_t t = 0; t < len; ++t) out.samples[t] += tc->samples[t];
    }
    const double n = static_cast<double>(tcs.size());
    for (double& v : out.samples) v /= n;
    return out;
}

BandedTimeCourse mean_se(std::span<const TimeCourse* const> tcs) {
    BandedTimeCourse band;
    band.mean = mean_course(tcs).samples;
    band.n_members = static_cast<int>(tcs.size());
    band.se.assign(band.mean.size(), 0.0);
    if (tcs.size() < 2) return band;
    const double n = static_cast<double>(tcs.size());
    for (const TimeCourse* tc : tcs) {
        for (std::size_t t = 0; t < band.mean.size(); ++t) {
            const double dev = tc->samples[t] - band.mean[t];
            band.se[t] += dev * dev;
        }
    }
    for (double& v : band.se) v = std::sqrt(v / (n - 1.0)) / std::sqrt(n);
    return band;
}

BandedTimeCourse mean_se(std::span<const TimeCourse> tcs) {
    std::vector<const TimeCourse*> ptrs;
    ptrs.reserve(tcs.size());
    for (const auto& tc : tcs) ptrs.push_back(&tc);
    return mean_se(std::span<const TimeCourse* const>(ptrs));
}

FCMatrix fc_matrix(std::span<const int> parcel_ids, std::span<const TimeCourse> parcel_tcs) {
    if (parcel_ids.size() != parcel_tcs.size())
        throw Error(ErrorKind::LengthMismatch, "parcel id and time course lists differ in length");
    if (parcel_tcs.size() < 2) throw Error(ErrorKind::TooFewItems, "functional connectivity needs at least 2 parcels");
    FCMatrix fc;
    fc.parcel_ids.assign(parcel_ids.begin(), parcel_ids.end());
    fc.corr = correlation_matrix(parcel_tcs);
    return fc;
}

std::vector<Chord> fc_filter(const FCMatrix& m, double lo, double hi) {
    if (!(lo <= hi)) throw Error(ErrorKind::InvalidRange, "filter range requires lo <= hi");
    std::vector<Chord> out;
    const std::size_t k = m.size();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double r = m.at(i, j);
            const double a = std::abs(r);
            if (lo <= a && a <= hi) out.push_back({i, j, r});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Chord& a, const Chord& b) { return std::abs(a.r) > std::abs(b.r); });
    return out;
}

} // namespace parcelsteer
