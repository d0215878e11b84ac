#pragma once

// Per-split class balancing by majority downsampling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "explab/io.hpp"

namespace explab {

struct DatasetSplit {
    SplitName name = SplitName::Train;
    /// Row indices into the owning dataset.
    std::vector<std::size_t> indices;
    /// 0/1 label per entry of `indices`.
    std::vector<int> labels;
    /// Optional group id (e.g. patient) per entry; carried, not used for selection.
    std::vector<std::string> groups;
};

struct ClassCounts {
    std::size_t negative = 0;
    std::size_t positive = 0;

    std::size_t total() const noexcept { return negative + positive; }
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct BalancedSplit {
    SplitName name = SplitName::Train;
    /// Selected dataset row indices, ascending.
    std::vector<std::size_t> selected;
    ClassCounts before;
    ClassCounts after;
};

/// Splits in train, validation, test order; splits without rows are omitted.
std::vector<DatasetSplit> splits_from_metadata(std::span<const MetadataRow> rows);

/// Within each split the minority class is kept whole and the majority class is
/// sampled uniformly without replacement down to the minority count. Each
/// split draws from its own stream of `seed`, so results do not depend on
/// which other splits are present.
std::vector<BalancedSplit> balance_classes(std::span<const DatasetSplit> splits, std::uint64_t seed);

} // namespace explab
