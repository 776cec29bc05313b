#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace unlearn {

enum class Activation { Relu, Tanh };

// Feed-forward perceptron shape: input width, zero or more hidden widths,
// class count, one activation kind for all hidden layers.
struct Architecture {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    int num_classes = 0;
    Activation activation = Activation::Relu;

    std::size_t param_count() const;
    std::vector<std::size_t> layer_widths() const; // input, hidden..., K

    // Plain-text descriptor line, e.g. "mlp 784 256 10 relu".
    std::string descriptor() const;
    static Architecture parse(const std::string& line);

    bool operator==(const Architecture&) const = default;
};

using ProbabilityVector = std::vector<double>;

// Immutable parameterized classifier. Updates produce new states.
struct ModelState {
    Architecture arch;
    std::vector<double> params; // layer-major: W row-major then b, per layer
    std::uint64_t seed = 0;
};

// Symmetric uniform fan-in initialization from the given seed; biases zero.
ModelState init_model(const Architecture& arch, std::uint64_t seed);

// Softmax of final-layer logits (max-subtracted). Deterministic.
ProbabilityVector predict_proba(const ModelState& model,
                                std::span<const double> x);

// Hard prediction in {1..K}; argmax ties break to the lowest class index.
int predict_label(const ModelState& model, std::span<const double> x);

// Loss specification: cross-entropy plus an optional uniform-MSE term
// (weight * (1/K) sum_k (p[k] - 1/K)^2) evaluated on the clean inputs.
struct LossSpec {
    double asr_weight = 0.0;
};

struct Batch {
    std::span<const double> inputs; // n * dim, fed to the cross-entropy term
    std::span<const int> labels;    // n entries in {1..K}
    // Inputs for the uniform-MSE term; empty means reuse `inputs`.
    std::span<const double> clean_inputs = {};
};

struct LossBreakdown {
    double cross_entropy = 0.0;
    double asr_term = 0.0; // already scaled by the configured weight
    double total = 0.0;
};

struct BackwardResult {
    LossBreakdown loss;
    std::vector<double> param_grads; // d(total)/d(theta)
    std::vector<double> input_grads; // d(total)/d(inputs), n * dim; CE path
};

// Batch-mean loss and exact reverse-mode gradients. Input gradients are
// produced only when requested (they cost a second transposed sweep).
BackwardResult loss_and_grads(const ModelState& model, const Batch& batch,
                              const LossSpec& spec,
                              bool want_input_grads = false);

// theta' = theta - eta * grads, architecture unchanged.
ModelState sgd_update(const ModelState& model, std::span<const double> grads,
                      double eta);

// Max over parameters of |analytic - central difference| / max(1, |cd|).
double grad_check(const ModelState& model, const Batch& batch,
                  const LossSpec& spec, double eps);

} // namespace unlearn
