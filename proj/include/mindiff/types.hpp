#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mindiff/matrix.hpp"

namespace mindiff {

/// Binary subgroup attribute; `unknown` where the attribute was not collected.
enum class Group : std::int8_t { kZero = 0, kOne = 1, kUnknown = -1 };

inline std::optional<int> group_value(Group g) {
    if (g == Group::kUnknown) return std::nullopt;
    return static_cast<int>(g);
}

/// Features, binary labels and the (possibly partially observed) group attribute.
/// A mini-batch is the same structure restricted to a subset of rows.
struct Dataset {
    Matrix x;
    std::vector<int> y;
    std::vector<Group> a;

    std::size_t size() const noexcept { return y.size(); }
    /// Throws DimensionError / ConfigError when fields disagree or labels are not binary.
    void validate() const;
    Dataset subset(std::span<const std::size_t> rows) const;

    bool operator==(const Dataset&) const = default;
};

using Batch = Dataset;

}  // namespace mindiff
