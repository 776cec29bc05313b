#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unlearn/perturb.hpp"

namespace unlearn {

enum class GeneratorMethod : std::uint8_t { TwoStage = 0, Em = 1, Rem = 2 };

std::string method_name(GeneratorMethod m);
GeneratorMethod parse_method(const std::string& name);

// Per-sample defensive perturbations, keyed to dataset positions and tied
// to the dataset by its identity hash.
struct NoiseBank {
    std::uint32_t dataset_hash = 0;
    std::vector<std::uint32_t> dims; // shape of one sample
    PerturbationBudget budget;       // crafting budget (radius = rho_u)
    GeneratorMethod method = GeneratorMethod::TwoStage;
    std::uint64_t seed = 0;
    std::vector<double> deltas; // count * prod(dims), row-major

    std::size_t sample_size() const {
        std::size_t p = 1;
        for (auto d : dims) p *= d;
        return p;
    }
    std::size_t count() const {
        const std::size_t s = sample_size();
        return s == 0 ? 0 : deltas.size() / s;
    }
    std::span<const double> delta(std::size_t i) const {
        return {deltas.data() + i * sample_size(), sample_size()};
    }

    bool operator==(const NoiseBank&) const = default;
};

} // namespace unlearn
