#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace unlearn {

// N labeled samples with a shared flat feature shape and declared bounds.
// Labels are 1-based, in {1..K}.
struct LabeledDataset {
    std::size_t num_samples = 0;
    std::size_t dim = 0;
    int num_classes = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> features; // num_samples * dim, row-major
    std::vector<int> labels;      // num_samples entries in {1..K}

    std::span<const double> sample(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }

    // Throws DataError when any invariant fails.
    void validate() const;

    // CRC-32 over the serialized feature+label bytes; ties NoiseBank files
    // to the dataset they were crafted for.
    std::uint32_t identity_hash() const;
};

// Deterministic split into train/test by shuffled indices.
struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset test;
};
DatasetSplit split_dataset(const LabeledDataset& data, double test_fraction,
                           std::uint64_t seed);

} // namespace unlearn
