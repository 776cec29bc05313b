#pragma once

#include <cstdint>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/model.hpp"
#include "unlearn/noise_bank.hpp"
#include "unlearn/perturb.hpp"

namespace unlearn {

struct GeneratorConfig {
    Architecture arch;
    int iterations = 0; // minibatch iterations M
    double eta = 0.1;
    int batch_size = 64;
    PerturbationBudget stage1; // rho_u, alpha_u, K_u
    PerturbationBudget stage2; // rho_a, alpha_a, K_a
    double asr_weight = 1.0;   // lambda; only the two-stage method uses it
    GeneratorMethod method = GeneratorMethod::TwoStage;
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError; enforces rho_a <= rho_u
};

struct TraceRecord {
    int iteration = 0;
    double ce_loss = 0.0;
    double asr_term = 0.0;  // lambda-scaled value entering the objective
    double clean_acc = 0.0; // surrogate accuracy on clean training data, %
    double r_s = 0.0;       // sample-wise randomness on clean training data
};

struct GeneratorTrace {
    std::vector<TraceRecord> records;
};

struct GeneratorResult {
    ModelState surrogate;
    GeneratorTrace trace;
};

// Dispatches on cfg.method.
GeneratorResult train_generator(const LabeledDataset& data,
                                const GeneratorConfig& cfg);

// Two-stage procedure: per minibatch, craft error-minimizing noise, craft
// adversarial noise on top of it, then one SGD step on the combined
// cross-entropy plus the clean-input uniform-MSE regularizer.
GeneratorResult train_two_stage_generator(const LabeledDataset& data,
                                          const GeneratorConfig& cfg);

// Error-minimizing baseline: stage 1 only, plain cross-entropy step.
GeneratorResult train_em_generator(const LabeledDataset& data,
                                   const GeneratorConfig& cfg);

// Robust-error-minimizing baseline: nested min-max crafting (a fresh inner
// maximize before every minimize step), then a plain cross-entropy step.
GeneratorResult train_rem_generator(const LabeledDataset& data,
                                    const GeneratorConfig& cfg);

// One final error-minimizing pass per sample against the frozen surrogate.
NoiseBank emit_noise_bank(const ModelState& surrogate,
                          const LabeledDataset& data,
                          const PerturbationBudget& budget,
                          GeneratorMethod method, std::uint64_t seed);

} // namespace unlearn
