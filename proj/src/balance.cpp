#include "explab/balance.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>

#include "explab/error.hpp"
#include "explab/rng.hpp"

namespace explab {
namespace {

void validate(std::span<const DatasetSplit> splits) {
    std::set<std::size_t> seen;
    std::set<SplitName> names;
    for (const auto& s : splits) {
        const std::string name(to_string(s.name));
        if (!names.insert(s.name).second) {
            throw std::invalid_argument("balance_classes: split '" + name + "' given twice");
        }
        if (s.labels.size() != s.indices.size() || (!s.groups.empty() && s.groups.size() != s.indices.size())) {
            throw ShapeError("balance_classes: split '" + name + "' has mismatched index/label/group lengths");
        }
        for (std::size_t i = 0; i < s.indices.size(); ++i) {
            if (s.labels[i] != 0 && s.labels[i] != 1) {
                throw std::invalid_argument("balance_classes: split '" + name + "' has a label other than 0/1");
            }
            if (!seen.insert(s.indices[i]).second) {
                throw std::invalid_argument("balance_classes: row " + std::to_string(s.indices[i]) +
                                            " appears twice (split '" + name + "')");
            }
        }
    }
}

} // namespace

std::vector<DatasetSplit> splits_from_metadata(std::span<const MetadataRow> rows) {
    std::vector<DatasetSplit> splits;
    for (SplitName name : {SplitName::Train, SplitName::Validation, SplitName::Test}) {
        DatasetSplit s;
        s.name = name;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].split == name) {
                s.indices.push_back(i);
                s.labels.push_back(rows[i].label);
                s.groups.push_back(rows[i].group);
            }
        }
        if (!s.indices.empty()) {
            splits.push_back(std::move(s));
        }
    }
    return splits;
}

std::vector<BalancedSplit> balance_classes(std::span<const DatasetSplit> splits, std::uint64_t seed) {
    validate(splits);
    std::vector<BalancedSplit> out;
    for (const auto& s : splits) {
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < s.indices.size(); ++i) {
            (s.labels[i] == 1 ? pos : neg).push_back(s.indices[i]);
        }
        const std::string name(to_string(s.name));
        if (pos.empty()) {
            throw std::invalid_argument("balance_classes: split '" + name + "' has no positive samples");
        }
        if (neg.empty()) {
            throw std::invalid_argument("balance_classes: split '" + name + "' has no negative samples");
        }

        BalancedSplit b;
        b.name = s.name;
        b.before = {neg.size(), pos.size()};
        auto& minority = pos.size() <= neg.size() ? pos : neg;
        auto& majority = pos.size() <= neg.size() ? neg : pos;
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s.name)));
        std::sort(majority.begin(), majority.end());
        std::shuffle(majority.begin(), majority.end(), rng);
        majority.resize(minority.size());

        b.selected = minority;
        b.selected.insert(b.selected.end(), majority.begin(), majority.end());
        std::sort(b.selected.begin(), b.selected.end());
        b.after = {minority.size(), minority.size()};
        out.push_back(std::move(b));
    }
    return out;
}

} // namespace explab
