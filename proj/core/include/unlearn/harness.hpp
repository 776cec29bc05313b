#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/model.hpp"
#include "unlearn/noise_bank.hpp"
#include "unlearn/perturb.hpp"

namespace unlearn {

struct VictimConfig {
    Architecture arch;
    int epochs = 0;
    double eta = 0.1;
    int batch_size = 64;
    // radius 0 or steps 0 means standard training
    PerturbationBudget adversary{0.0, 0.0, 0, PerturbInit::RandomUniform};
    std::uint64_t seed = 0;

    void validate() const;
};

struct ProtectionPlan {
    double percent = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> protected_indices; // unique, sorted
};

// Selects round-half-up(percent * N / 100) indices deterministically.
ProtectionPlan make_protection_plan(std::size_t num_samples, double percent,
                                    std::uint64_t seed);

// Adds the bank's per-sample noise to the planned subset. Labels untouched.
// Throws DataError when the bank's dataset hash does not match.
LabeledDataset apply_protection(const LabeledDataset& data,
                                const NoiseBank& bank,
                                const ProtectionPlan& plan);

// Standard or adversarial minibatch SGD, deterministic under the seed.
ModelState train_victim(const LabeledDataset& data, const VictimConfig& cfg);

// 100 * correct-argmax / N; ties break to the lowest class index.
double evaluate_accuracy(const ModelState& model, const LabeledDataset& test);

struct ReportTable {
    std::string corner; // header over the row-label column
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<double> cells;           // rows x cols
    std::vector<double> runtime_seconds; // same shape; may be empty

    double& at(std::size_t r, std::size_t c) {
        return cells[r * col_labels.size() + c];
    }
    double at(std::size_t r, std::size_t c) const {
        return cells[r * col_labels.size() + c];
    }
    void validate() const; // rectangular, cells finite
};

struct NamedBank {
    std::string name;
    const NoiseBank* bank;
};

// One victim per (column, adversarial radius) cell: a clean column plus one
// per bank, all at 100% protection. Step size per radius is
// alpha_fraction * radius.
ReportTable run_radius_sweep(const LabeledDataset& train,
                             const LabeledDataset& test,
                             const std::vector<NamedBank>& banks,
                             const std::vector<double>& radii,
                             const VictimConfig& tmpl, double alpha_fraction,
                             int jobs = 1);

// One victim per protection percentage, standard or adversarial per tmpl.
ReportTable run_percentage_sweep(const LabeledDataset& train,
                                 const LabeledDataset& test,
                                 const NoiseBank& bank,
                                 const std::vector<double>& percentages,
                                 const VictimConfig& tmpl, int jobs = 1);

} // namespace unlearn
