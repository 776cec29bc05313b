#include "unlearn/generator.hpp"

#include <cmath>
#include <string>

#include "unlearn/errors.hpp"
#include "unlearn/randomness.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::string method_name(GeneratorMethod m) {
    switch (m) {
        case GeneratorMethod::TwoStage: return "two-stage";
        case GeneratorMethod::Em: return "em";
        case GeneratorMethod::Rem: return "rem";
    }
    return "two-stage";
}

GeneratorMethod parse_method(const std::string& name) {
    if (name == "two-stage") return GeneratorMethod::TwoStage;
    if (name == "em") return GeneratorMethod::Em;
    if (name == "rem") return GeneratorMethod::Rem;
    throw ConfigError("unknown generator method '" + name +
                      "' (two-stage|em|rem)");
}

void GeneratorConfig::validate() const {
    if (iterations < 0) throw ConfigError("generator: iterations must be >= 0");
    if (!(eta > 0.0)) throw ConfigError("generator: eta must be > 0");
    if (batch_size < 1) throw ConfigError("generator: batch size must be >= 1");
    if (asr_weight < 0.0) throw ConfigError("generator: lambda must be >= 0");
    stage1.validate();
    stage2.validate();
    if (stage2.radius > stage1.radius) {
        throw ConfigError("generator: rho_a (" + std::to_string(stage2.radius) +
                          ") must not exceed rho_u (" +
                          std::to_string(stage1.radius) + ")");
    }
}

namespace {

// Minibatch index stream: without replacement within an epoch, reshuffled
// per epoch from the master seed.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::size_t batch, std::uint64_t seed)
        : n_(n), batch_(std::min(batch, n)), seed_(seed) {
        order_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
        reshuffle();
    }

    const std::vector<std::size_t>& next() {
        if (cursor_ + batch_ > n_) {
            ++epoch_;
            cursor_ = 0;
            reshuffle();
        }
        current_.assign(order_.begin() + cursor_,
                        order_.begin() + cursor_ + batch_);
        cursor_ += batch_;
        return current_;
    }

private:
    void reshuffle() {
        Rng rng(derive_seed(seed_, 0xe90c0000ULL + epoch_));
        rng.shuffle(order_);
    }

    std::size_t n_, batch_, cursor_ = 0, epoch_ = 0;
    std::uint64_t seed_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> current_;
};

struct GatheredBatch {
    std::vector<double> xs;
    std::vector<int> ys;
};

GatheredBatch gather(const LabeledDataset& data,
                     const std::vector<std::size_t>& idx) {
    GatheredBatch b;
    b.xs.reserve(idx.size() * data.dim);
    b.ys.reserve(idx.size());
    for (auto i : idx) {
        const auto s = data.sample(i);
        b.xs.insert(b.xs.end(), s.begin(), s.end());
        b.ys.push_back(data.labels[i]);
    }
    return b;
}

TraceRecord trace_record(int iter, const LossBreakdown& loss,
                         const ModelState& model, const LabeledDataset& data) {
    TraceRecord rec;
    rec.iteration = iter;
    rec.ce_loss = loss.cross_entropy;
    rec.asr_term = loss.asr_term;
    std::size_t correct = 0;
    double rs = 0.0;
    for (std::size_t i = 0; i < data.num_samples; ++i) {
        const auto p = predict_proba(model, data.sample(i));
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.size(); ++k) {
            if (p[k] > p[best]) best = k;
        }
        if (static_cast<int>(best) + 1 == data.labels[i]) ++correct;
        rs += mse_to_uniform(p);
    }
    rec.clean_acc =
        100.0 * static_cast<double>(correct) / static_cast<double>(data.num_samples);
    rec.r_s = rs / static_cast<double>(data.num_samples);
    return rec;
}

std::uint64_t stage_seed(std::uint64_t master, int iter, std::uint64_t tag) {
    return derive_seed(master, (static_cast<std::uint64_t>(iter) << 8) | tag);
}

GeneratorResult run_generator(const LabeledDataset& data,
                              const GeneratorConfig& cfg) {
    cfg.validate();
    data.validate();
    if (data.dim != cfg.arch.input_dim ||
        data.num_classes != cfg.arch.num_classes) {
        throw ConfigError("generator: architecture does not match dataset");
    }
    const FeatureBounds bounds{data.lo, data.hi};
    GeneratorResult out;
    out.surrogate = init_model(cfg.arch, derive_seed(cfg.seed, 0x11117));
    BatchSampler sampler(data.num_samples,
                         static_cast<std::size_t>(cfg.batch_size), cfg.seed);

    for (int it = 0; it < cfg.iterations; ++it) {
        const auto& idx = sampler.next();
        const auto batch = gather(data, idx);
        const std::size_t nb = batch.ys.size() * data.dim;

        try {
            std::vector<double> delta_u(nb, 0.0);
            std::vector<double> protected_xs(nb);
            std::vector<double> delta_a(nb, 0.0);
            LossSpec spec;
            if (cfg.method != GeneratorMethod::Rem) {
                delta_u = pgd_error_minimize(out.surrogate, batch.xs, batch.ys,
                                             bounds, cfg.stage1,
                                             stage_seed(cfg.seed, it, 1));
            }
            for (std::size_t j = 0; j < nb; ++j) {
                protected_xs[j] = batch.xs[j] + delta_u[j];
            }
            if (cfg.method == GeneratorMethod::TwoStage) {
                delta_a = pgd_error_maximize(out.surrogate, protected_xs,
                                             batch.ys, bounds, cfg.stage2,
                                             stage_seed(cfg.seed, it, 2));
                spec.asr_weight = cfg.asr_weight;
            } else if (cfg.method == GeneratorMethod::Rem) {
                // Nested min-max: K_u minimize steps on delta_u, each taken
                // against a fresh inner maximize.
                if (cfg.stage1.init == PerturbInit::RandomUniform &&
                    cfg.stage1.radius > 0.0) {
                    const std::uint64_t s1 = stage_seed(cfg.seed, it, 1);
                    for (std::size_t i = 0; i < batch.ys.size(); ++i) {
                        Rng rng(derive_seed(s1, i));
                        std::span<double> di{delta_u.data() + i * data.dim,
                                             data.dim};
                        for (std::size_t j = 0; j < data.dim; ++j) {
                            di[j] = rng.uniform(-cfg.stage1.radius,
                                                cfg.stage1.radius);
                        }
                        clamp_to_bounds(
                            std::span<const double>{batch.xs.data() + i * data.dim,
                                                    data.dim},
                            di, bounds);
                    }
                }
                for (int k = 0; k < cfg.stage1.steps; ++k) {
                    for (std::size_t j = 0; j < nb; ++j) {
                        protected_xs[j] = batch.xs[j] + delta_u[j];
                    }
                    delta_a = pgd_error_maximize(
                        out.surrogate, protected_xs, batch.ys, bounds,
                        cfg.stage2, stage_seed(cfg.seed, it, 0x10 + k));
                    std::vector<double> attacked(nb);
                    for (std::size_t j = 0; j < nb; ++j) {
                        attacked[j] = protected_xs[j] + delta_a[j];
                    }
                    const auto bw = loss_and_grads(
                        out.surrogate, Batch{attacked, batch.ys}, LossSpec{},
                        true);
                    for (std::size_t i = 0; i < batch.ys.size(); ++i) {
                        std::span<double> di{delta_u.data() + i * data.dim,
                                             data.dim};
                        for (std::size_t j = 0; j < data.dim; ++j) {
                            di[j] -= cfg.stage1.step *
                                     step_sign(bw.input_grads[i * data.dim + j]);
                        }
                        project_linf(di, cfg.stage1.radius);
                        clamp_to_bounds(
                            std::span<const double>{batch.xs.data() + i * data.dim,
                                                    data.dim},
                            di, bounds);
                    }
                }
                for (std::size_t j = 0; j < nb; ++j) {
                    protected_xs[j] = batch.xs[j] + delta_u[j];
                }
                delta_a = pgd_error_maximize(out.surrogate, protected_xs,
                                             batch.ys, bounds, cfg.stage2,
                                             stage_seed(cfg.seed, it, 2));
            }

            std::vector<double> attacked(nb);
            for (std::size_t j = 0; j < nb; ++j) {
                attacked[j] = protected_xs[j] + delta_a[j];
            }
            Batch update_batch{attacked, batch.ys, batch.xs};
            const auto bw =
                loss_and_grads(out.surrogate, update_batch, spec, false);
            out.surrogate = sgd_update(out.surrogate, bw.param_grads, cfg.eta);
            out.trace.records.push_back(
                trace_record(it + 1, bw.loss, out.surrogate, data));
        } catch (const NumericError& e) {
            throw NumericError("generator iteration " + std::to_string(it + 1) +
                               ": " + e.what());
        }
    }
    return out;
}

} // namespace

GeneratorResult train_two_stage_generator(const LabeledDataset& data,
                                          const GeneratorConfig& cfg) {
    if (cfg.method != GeneratorMethod::TwoStage) {
        throw ConfigError("train_two_stage_generator: method tag mismatch");
    }
    return run_generator(data, cfg);
}

GeneratorResult train_em_generator(const LabeledDataset& data,
                                   const GeneratorConfig& cfg) {
    if (cfg.method != GeneratorMethod::Em) {
        throw ConfigError("train_em_generator: method tag mismatch");
    }
    return run_generator(data, cfg);
}

GeneratorResult train_rem_generator(const LabeledDataset& data,
                                    const GeneratorConfig& cfg) {
    if (cfg.method != GeneratorMethod::Rem) {
        throw ConfigError("train_rem_generator: method tag mismatch");
    }
    return run_generator(data, cfg);
}

GeneratorResult train_generator(const LabeledDataset& data,
                                const GeneratorConfig& cfg) {
    return run_generator(data, cfg);
}

NoiseBank emit_noise_bank(const ModelState& surrogate,
                          const LabeledDataset& data,
                          const PerturbationBudget& budget,
                          GeneratorMethod method, std::uint64_t seed) {
    data.validate();
    if (surrogate.arch.input_dim != data.dim ||
        surrogate.arch.num_classes != data.num_classes) {
        throw std::invalid_argument("emit_noise_bank: surrogate/dataset mismatch");
    }
    NoiseBank bank;
    bank.dataset_hash = data.identity_hash();
    bank.dims = {static_cast<std::uint32_t>(data.dim)};
    bank.budget = budget;
    bank.method = method;
    bank.seed = seed;
    bank.deltas =
        pgd_error_minimize(surrogate, data.features, data.labels,
                           FeatureBounds{data.lo, data.hi}, budget,
                           derive_seed(seed, 0xba5e));
    return bank;
}

} // namespace unlearn
