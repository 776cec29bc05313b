#include "unlearn/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void PerturbationBudget::validate() const {
    if (radius < 0.0) throw ConfigError("budget: radius must be >= 0");
    if (steps < 0) throw ConfigError("budget: step count must be >= 0");
    if (steps > 0 && !(step > 0.0)) {
        throw ConfigError("budget: step size must be > 0 when steps > 0");
    }
}

void project_linf(std::span<double> delta, double radius) {
    for (double& d : delta) d = std::clamp(d, -radius, radius);
}

void clamp_to_bounds(std::span<const double> base, std::span<double> delta,
                     FeatureBounds bounds) {
    for (std::size_t i = 0; i < delta.size(); ++i) {
        delta[i] = std::clamp(delta[i], bounds.lo - base[i], bounds.hi - base[i]);
        // bounds.hi - base[i] rounds; nudge so base + delta lands inside
        while (base[i] + delta[i] > bounds.hi) {
            delta[i] = std::nextafter(delta[i], -1.0 / 0.0);
        }
        while (base[i] + delta[i] < bounds.lo) {
            delta[i] = std::nextafter(delta[i], 1.0 / 0.0);
        }
    }
}

namespace {

std::vector<double> pgd_craft(const ModelState& model,
                              std::span<const double> base,
                              std::span<const int> labels, FeatureBounds bounds,
                              const PerturbationBudget& budget,
                              std::uint64_t seed, double direction) {
    budget.validate();
    const std::size_t dim = model.arch.input_dim;
    const std::size_t n = labels.size();
    if (base.size() != n * dim) {
        throw std::invalid_argument("pgd: input buffer size mismatch");
    }

    std::vector<double> delta(n * dim, 0.0);
    if (budget.init == PerturbInit::RandomUniform && budget.radius > 0.0) {
        // per-sample streams, so batched and per-sample crafting agree
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(derive_seed(seed, i));
            for (std::size_t j = 0; j < dim; ++j) {
                delta[i * dim + j] = rng.uniform(-budget.radius, budget.radius);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::span<double> di{delta.data() + i * dim, dim};
        project_linf(di, budget.radius);
        clamp_to_bounds(base.subspan(i * dim, dim), di, bounds);
    }

    std::vector<double> perturbed(n * dim);
    for (int k = 0; k < budget.steps; ++k) {
        for (std::size_t j = 0; j < perturbed.size(); ++j) {
            perturbed[j] = base[j] + delta[j];
        }
        Batch batch{perturbed, labels};
        BackwardResult bw;
        try {
            bw = loss_and_grads(model, batch, LossSpec{}, true);
        } catch (const NumericError& e) {
            throw NumericError("pgd: iteration " + std::to_string(k + 1) + ": " +
                               e.what());
        }
        for (double g : bw.input_grads) {
            if (!std::isfinite(g)) {
                throw NumericError("pgd: non-finite gradient at iteration " +
                                   std::to_string(k + 1));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::span<double> di{delta.data() + i * dim, dim};
            for (std::size_t j = 0; j < dim; ++j) {
                di[j] += direction * budget.step *
                         step_sign(bw.input_grads[i * dim + j]);
            }
            project_linf(di, budget.radius);
            clamp_to_bounds(base.subspan(i * dim, dim), di, bounds);
        }
    }
    return delta;
}

} // namespace

std::vector<double> pgd_error_minimize(const ModelState& model,
                                       std::span<const double> base,
                                       std::span<const int> labels,
                                       FeatureBounds bounds,
                                       const PerturbationBudget& budget,
                                       std::uint64_t seed) {
    return pgd_craft(model, base, labels, bounds, budget, seed, -1.0);
}

std::vector<double> pgd_error_maximize(const ModelState& model,
                                       std::span<const double> base,
                                       std::span<const int> labels,
                                       FeatureBounds bounds,
                                       const PerturbationBudget& budget,
                                       std::uint64_t seed) {
    return pgd_craft(model, base, labels, bounds, budget, seed, +1.0);
}

} // namespace unlearn
