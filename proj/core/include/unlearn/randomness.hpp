#pragma once

#include <span>
#include <string>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/model.hpp"

namespace unlearn {

// Distance of a probability vector from the uniform reference (1/K,...,1/K).
enum class UniformDistance { Mse, CrossEntropy, Kl };

std::string distance_name(UniformDistance d);
UniformDistance parse_distance(const std::string& name);

// (1/K) sum_j (p_j - 1/K)^2. Zero iff p is uniform; bounded by 4/K.
double mse_to_uniform(std::span<const double> proba);

// -(1/K) sum_j ln p_j. Always >= ln K. Requires strictly positive entries.
double ce_to_uniform(std::span<const double> proba);

// (1/K) sum_j ln((1/K) / p_j). Zero iff p is uniform.
double kl_uniform(std::span<const double> proba);

// |ce - kl - ln K|; the cross-entropy/KL equivalence residual.
double lemma1_residual(std::span<const double> proba);

double uniform_distance(std::span<const double> proba, UniformDistance d);

struct RandomnessReport {
    double r_p = 0.0;
    double r_s = 0.0;
    std::vector<std::vector<double>> per_class; // P_k, one per class
    UniformDistance distance = UniformDistance::Mse;
};

// Averaged prediction randomness over hard predictions: builds each
// per-class prediction distribution P_k and averages L(P_k) weighted by
// class frequency. Every class must appear among the labels.
double averaged_prediction_randomness(std::span<const int> predictions,
                                      std::span<const int> labels, int K,
                                      UniformDistance d = UniformDistance::Mse);

// Mean over samples of the distance from uniform of the predicted vector.
double averaged_sample_wise_randomness(const ModelState& model,
                                       const LabeledDataset& data,
                                       UniformDistance d = UniformDistance::Mse);

// Full report: R_p, R_s and the per-class distributions.
RandomnessReport randomness_report(const ModelState& model,
                                   const LabeledDataset& data,
                                   UniformDistance d = UniformDistance::Mse);

} // namespace unlearn
