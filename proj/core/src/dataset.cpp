#include "unlearn/dataset.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include <zlib.h>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void LabeledDataset::validate() const {
    if (num_samples < 1) {
        throw DataError("dataset: empty (N >= 1 required)");
    }
    if (num_classes < 2) {
        throw DataError("dataset: class count " + std::to_string(num_classes) +
                        " < 2");
    }
    if (features.size() != num_samples * dim) {
        throw DataError("dataset: feature buffer size mismatch");
    }
    if (labels.size() != num_samples) {
        throw DataError("dataset: label count mismatch");
    }
    if (!(lo < hi)) {
        throw DataError("dataset: bounds must satisfy lo < hi");
    }
    for (std::size_t i = 0; i < num_samples; ++i) {
        if (labels[i] < 1 || labels[i] > num_classes) {
            throw DataError("dataset: label " + std::to_string(labels[i]) +
                            " at sample " + std::to_string(i) +
                            " outside {1.." + std::to_string(num_classes) + "}");
        }
    }
    for (std::size_t j = 0; j < features.size(); ++j) {
        const double v = features[j];
        if (!std::isfinite(v) || v < lo || v > hi) {
            throw DataError("dataset: feature at flat index " +
                            std::to_string(j) + " outside declared bounds");
        }
    }
}

std::uint32_t LabeledDataset::identity_hash() const {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(features.data()),
                static_cast<uInt>(features.size() * sizeof(double)));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(labels.data()),
                static_cast<uInt>(labels.size() * sizeof(int)));
    return static_cast<std::uint32_t>(crc);
}

DatasetSplit split_dataset(const LabeledDataset& data, double test_fraction,
                           std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw ConfigError("split: test fraction must be in [0, 1)");
    }
    std::vector<std::size_t> order(data.num_samples);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5117));
    rng.shuffle(order);

    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(data.num_samples) + 0.5));

    auto take = [&](std::size_t begin, std::size_t end) {
        LabeledDataset out;
        out.dim = data.dim;
        out.num_classes = data.num_classes;
        out.lo = data.lo;
        out.hi = data.hi;
        out.num_samples = end - begin;
        out.features.reserve(out.num_samples * out.dim);
        out.labels.reserve(out.num_samples);
        for (std::size_t k = begin; k < end; ++k) {
            const auto s = data.sample(order[k]);
            out.features.insert(out.features.end(), s.begin(), s.end());
            out.labels.push_back(data.labels[order[k]]);
        }
        return out;
    };

    DatasetSplit result;
    result.test = take(0, n_test);
    result.train = take(n_test, data.num_samples);
    return result;
}

} // namespace unlearn
