#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unlearn/model.hpp"

namespace unlearn {

enum class PerturbInit { Zero, RandomUniform };

// PGD hyperparameters for one crafting stage.
struct PerturbationBudget {
    double radius = 0.0;
    double step = 0.0;
    int steps = 0;
    PerturbInit init = PerturbInit::Zero;

    void validate() const; // throws ConfigError

    bool operator==(const PerturbationBudget&) const = default;
};

struct FeatureBounds {
    double lo = 0.0;
    double hi = 1.0;
};

// Clamp every coordinate of delta into [-radius, radius]. Idempotent.
void project_linf(std::span<double> delta, double radius);

// Shrink delta so base + delta stays in [lo, hi] coordinatewise.
// Never grows a coordinate's magnitude.
void clamp_to_bounds(std::span<const double> base, std::span<double> delta,
                     FeatureBounds bounds);

// sign with sign(0) = 0.
inline double step_sign(double g) { return (g > 0.0) - (g < 0.0); }

// Error-minimizing PGD: K iterations of
//   delta <- clamp(project(delta - alpha * sign(d ce / d delta)))
// against cross-entropy of model(base + delta) vs labels. Batched; the
// returned buffer is n * dim. `seed` drives the random init when requested.
std::vector<double> pgd_error_minimize(const ModelState& model,
                                       std::span<const double> base,
                                       std::span<const int> labels,
                                       FeatureBounds bounds,
                                       const PerturbationBudget& budget,
                                       std::uint64_t seed);

// Error-maximizing PGD (gradient ascent), same feasibility contract.
// `base` is the already-protected input x + delta_u.
std::vector<double> pgd_error_maximize(const ModelState& model,
                                       std::span<const double> base,
                                       std::span<const int> labels,
                                       FeatureBounds bounds,
                                       const PerturbationBudget& budget,
                                       std::uint64_t seed);

} // namespace unlearn
