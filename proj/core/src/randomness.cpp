#include "unlearn/randomness.hpp"

#include <cmath>

#include "unlearn/errors.hpp"

namespace unlearn {

std::string distance_name(UniformDistance d) {
    switch (d) {
        case UniformDistance::Mse: return "mse";
        case UniformDistance::CrossEntropy: return "ce";
        case UniformDistance::Kl: return "kl";
    }
    return "mse";
}

UniformDistance parse_distance(const std::string& name) {
    if (name == "mse") return UniformDistance::Mse;
    if (name == "ce") return UniformDistance::CrossEntropy;
    if (name == "kl") return UniformDistance::Kl;
    throw ConfigError("unknown distance '" + name + "' (mse|ce|kl)");
}

double mse_to_uniform(std::span<const double> proba) {
    const double invK = 1.0 / static_cast<double>(proba.size());
    double s = 0.0;
    for (double p : proba) {
        const double d = p - invK;
        s += d * d;
    }
    return s * invK;
}

double ce_to_uniform(std::span<const double> proba) {
    const double invK = 1.0 / static_cast<double>(proba.size());
    double s = 0.0;
    for (double p : proba) {
        if (!(p > 0.0)) {
            throw NumericError("ce_to_uniform: nonpositive probability entry");
        }
        s -= std::log(p);
    }
    return s * invK;
}

double kl_uniform(std::span<const double> proba) {
    const double invK = 1.0 / static_cast<double>(proba.size());
    double s = 0.0;
    for (double p : proba) {
        if (!(p > 0.0)) {
            throw NumericError("kl_uniform: nonpositive probability entry");
        }
        s += std::log(invK / p);
    }
    return s * invK;
}

double lemma1_residual(std::span<const double> proba) {
    const double lnK = std::log(static_cast<double>(proba.size()));
    return std::abs(ce_to_uniform(proba) - kl_uniform(proba) - lnK);
}

double uniform_distance(std::span<const double> proba, UniformDistance d) {
    switch (d) {
        case UniformDistance::Mse: return mse_to_uniform(proba);
        case UniformDistance::CrossEntropy: return ce_to_uniform(proba);
        case UniformDistance::Kl: return kl_uniform(proba);
    }
    return mse_to_uniform(proba);
}

namespace {

std::vector<std::vector<double>> class_distributions(
    std::span<const int> predictions, std::span<const int> labels, int K) {
    if (predictions.size() != labels.size() || labels.empty()) {
        throw std::invalid_argument(
            "prediction randomness: arrays must be same nonempty length");
    }
    std::vector<std::vector<double>> pk(
        static_cast<std::size_t>(K),
        std::vector<double>(static_cast<std::size_t>(K), 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        const int c = predictions[i];
        if (y < 1 || y > K || c < 1 || c > K) {
            throw std::invalid_argument(
                "prediction randomness: label or prediction out of range");
        }
        pk[y - 1][c - 1] += 1.0;
        counts[y - 1] += 1;
    }
    for (int k = 0; k < K; ++k) {
        if (counts[k] == 0) {
            throw std::invalid_argument("prediction randomness: class " +
                                        std::to_string(k + 1) +
                                        " absent from labels");
        }
        for (double& v : pk[k]) v /= static_cast<double>(counts[k]);
    }
    return pk;
}

} // namespace

double averaged_prediction_randomness(std::span<const int> predictions,
                                      std::span<const int> labels, int K,
                                      UniformDistance d) {
    const auto pk = class_distributions(predictions, labels, K);
    std::vector<std::size_t> counts(static_cast<std::size_t>(K), 0);
    for (int y : labels) counts[y - 1] += 1;
    double rp = 0.0;
    for (int k = 0; k < K; ++k) {
        rp += static_cast<double>(counts[k]) * uniform_distance(pk[k], d);
    }
    return rp / static_cast<double>(labels.size());
}

double averaged_sample_wise_randomness(const ModelState& model,
                                       const LabeledDataset& data,
                                       UniformDistance d) {
    if (data.num_samples < 1) {
        throw std::invalid_argument("sample-wise randomness: empty dataset");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < data.num_samples; ++i) {
        s += uniform_distance(predict_proba(model, data.sample(i)), d);
    }
    return s / static_cast<double>(data.num_samples);
}

RandomnessReport randomness_report(const ModelState& model,
                                   const LabeledDataset& data,
                                   UniformDistance d) {
    std::vector<int> preds(data.num_samples);
    for (std::size_t i = 0; i < data.num_samples; ++i) {
        preds[i] = predict_label(model, data.sample(i));
    }
    RandomnessReport rep;
    rep.distance = d;
    rep.per_class = class_distributions(preds, data.labels, data.num_classes);
    rep.r_p = averaged_prediction_randomness(preds, data.labels,
                                             data.num_classes, d);
    rep.r_s = averaged_sample_wise_randomness(model, data, d);
    return rep;
}

} // namespace unlearn
