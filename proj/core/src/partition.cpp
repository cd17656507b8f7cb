#include "parcelsteer/partition.hpp"

#include <map>
#include <unordered_map>
#include <utility>

#include "parcelsteer/errors.hpp"

namespace parcelsteer {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorKind::LengthMismatch, "labelings cover different item counts");
}

} // namespace

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    require_same_size(a.size(), b.size());
    std::map<std::pair<int, int>, double> contingency;
    std::unordered_map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        contingency[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [key, count] : contingency) index += choose2(count);
    for (const auto& [key, count] : rows) sum_rows += choose2(count);
    for (const auto& [key, count] : cols) sum_cols += choose2(count);
    const double total = choose2(static_cast<double>(a.size()));
    if (total == 0.0) return 1.0;
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

bool refines(std::span<const int> fine, std::span<const int> coarse) {
    require_same_size(fine.size(), coarse.size());
    std::unordered_map<int, int> owner;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        auto [it, inserted] = owner.emplace(fine[i], coarse[i]);
        if (!inserted && it->second != coarse[i]) return false;
    }
    return true;
}

} // namespace parcelsteer
