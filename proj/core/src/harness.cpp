#include "unlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

void VictimConfig::validate() const {
    if (epochs < 0) throw ConfigError("victim: epochs must be >= 0");
    if (!(eta > 0.0)) throw ConfigError("victim: eta must be > 0");
    if (batch_size < 1) throw ConfigError("victim: batch size must be >= 1");
    adversary.validate();
}

ProtectionPlan make_protection_plan(std::size_t num_samples, double percent,
                                    std::uint64_t seed) {
    if (percent < 0.0 || percent > 100.0) {
        throw ConfigError("protection: percent must be in [0, 100]");
    }
    ProtectionPlan plan;
    plan.percent = percent;
    plan.seed = seed;
    const std::size_t take = static_cast<std::size_t>(
        std::floor(percent * static_cast<double>(num_samples) / 100.0 + 0.5));
    std::vector<std::size_t> order(num_samples);
    for (std::size_t i = 0; i < num_samples; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x9c07));
    rng.shuffle(order);
    plan.protected_indices.assign(order.begin(), order.begin() + take);
    std::sort(plan.protected_indices.begin(), plan.protected_indices.end());
    return plan;
}

LabeledDataset apply_protection(const LabeledDataset& data,
                                const NoiseBank& bank,
                                const ProtectionPlan& plan) {
    if (bank.dataset_hash != data.identity_hash()) {
        throw DataError("apply_protection: noise bank was crafted for a "
                        "different dataset (hash mismatch)");
    }
    if (bank.count() != data.num_samples || bank.sample_size() != data.dim) {
        throw DataError("apply_protection: bank shape mismatch");
    }
    LabeledDataset out = data;
    for (std::size_t i : plan.protected_indices) {
        if (i >= data.num_samples) {
            throw ConfigError("protection plan index out of range");
        }
        const auto d = bank.delta(i);
        for (std::size_t j = 0; j < data.dim; ++j) {
            out.features[i * data.dim + j] =
                std::clamp(data.features[i * data.dim + j] + d[j], data.lo,
                           data.hi);
        }
    }
    return out;
}

ModelState train_victim(const LabeledDataset& data, const VictimConfig& cfg) {
    cfg.validate();
    data.validate();
    if (data.dim != cfg.arch.input_dim ||
        data.num_classes != cfg.arch.num_classes) {
        throw ConfigError("victim: architecture does not match dataset");
    }
    const FeatureBounds bounds{data.lo, data.hi};
    const bool adversarial = cfg.adversary.radius > 0.0 && cfg.adversary.steps > 0;

    ModelState model = init_model(cfg.arch, derive_seed(cfg.seed, 0x71c));
    const std::size_t batch =
        std::min(static_cast<std::size_t>(cfg.batch_size), data.num_samples);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(data.num_samples);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, 0xe70c0000ULL + epoch));
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start + batch <= data.num_samples;
             start += batch) {
            std::vector<double> xs;
            std::vector<int> ys;
            xs.reserve(batch * data.dim);
            ys.reserve(batch);
            for (std::size_t k = start; k < start + batch; ++k) {
                const auto s = data.sample(order[k]);
                xs.insert(xs.end(), s.begin(), s.end());
                ys.push_back(data.labels[order[k]]);
            }
            try {
                if (adversarial) {
                    const auto delta = pgd_error_maximize(
                        model, xs, ys, bounds, cfg.adversary,
                        derive_seed(cfg.seed,
                                    0xadULL << 32 |
                                        (static_cast<std::uint64_t>(epoch) << 16) |
                                        (start / batch)));
                    for (std::size_t j = 0; j < xs.size(); ++j) {
                        xs[j] += delta[j];
                    }
                }
                const auto bw =
                    loss_and_grads(model, Batch{xs, ys}, LossSpec{}, false);
                model = sgd_update(model, bw.param_grads, cfg.eta);
            } catch (const NumericError& e) {
                throw NumericError("victim epoch " + std::to_string(epoch + 1) +
                                   " batch " + std::to_string(start / batch + 1) +
                                   ": " + e.what());
            }
        }
    }
    return model;
}

double evaluate_accuracy(const ModelState& model, const LabeledDataset& test) {
    test.validate();
    if (model.arch.input_dim != test.dim) {
        throw std::invalid_argument("evaluate_accuracy: shape mismatch");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.num_samples; ++i) {
        if (predict_label(model, test.sample(i)) == test.labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) /
           static_cast<double>(test.num_samples);
}

void ReportTable::validate() const {
    const std::size_t want = row_labels.size() * col_labels.size();
    if (cells.size() != want) {
        throw DataError("report table: cell count does not match labels");
    }
    if (!runtime_seconds.empty() && runtime_seconds.size() != want) {
        throw DataError("report table: runtime shape mismatch");
    }
    for (double c : cells) {
        if (!std::isfinite(c)) throw DataError("report table: non-finite cell");
    }
}

namespace {

// Runs cell jobs on up to `jobs` workers; results land by index, so output
// is independent of scheduling.
void run_cells(std::vector<std::function<void()>>& work, int jobs) {
    if (jobs <= 1 || work.size() <= 1) {
        for (auto& w : work) w();
        return;
    }
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= work.size()) return;
            try {
                work[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(work.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

} // namespace

ReportTable run_radius_sweep(const LabeledDataset& train,
                             const LabeledDataset& test,
                             const std::vector<NamedBank>& banks,
                             const std::vector<double>& radii,
                             const VictimConfig& tmpl, double alpha_fraction,
                             int jobs) {
    if (!std::is_sorted(radii.begin(), radii.end())) {
        throw ConfigError("radius sweep: radii must be sorted ascending");
    }
    if (!(alpha_fraction > 0.0)) {
        throw ConfigError("radius sweep: alpha fraction must be > 0");
    }
    for (std::size_t b = 1; b < banks.size(); ++b) {
        if (banks[b].bank->budget.radius != banks[0].bank->budget.radius) {
            throw ConfigError("radius sweep: banks must share rho_u");
        }
    }

    ReportTable table;
    table.corner = "rho_a";
    for (double r : radii) table.row_labels.push_back(format_number(r));
    table.col_labels.push_back("clean");
    for (const auto& nb : banks) table.col_labels.push_back(nb.name);
    const std::size_t cols = table.col_labels.size();
    table.cells.assign(radii.size() * cols, 0.0);
    table.runtime_seconds.assign(radii.size() * cols, 0.0);

    // Protected variants are shared across rows.
    std::vector<LabeledDataset> protected_sets;
    protected_sets.reserve(banks.size());
    for (const auto& nb : banks) {
        protected_sets.push_back(apply_protection(
            train, *nb.bank,
            make_protection_plan(train.num_samples, 100.0, tmpl.seed)));
    }

    std::vector<std::function<void()>> work;
    for (std::size_t r = 0; r < radii.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            work.push_back([&, r, c] {
                VictimConfig cfg = tmpl;
                cfg.adversary.radius = radii[r];
                cfg.adversary.step = radii[r] * alpha_fraction;
                const LabeledDataset& cell_data =
                    c == 0 ? train : protected_sets[c - 1];
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    const auto model = train_victim(cell_data, cfg);
                    table.cells[r * cols + c] = evaluate_accuracy(model, test);
                } catch (const NumericError& e) {
                    throw NumericError("radius sweep cell (" +
                                       table.row_labels[r] + ", " +
                                       table.col_labels[c] + "): " + e.what());
                }
                const auto t1 = std::chrono::steady_clock::now();
                table.runtime_seconds[r * cols + c] =
                    std::chrono::duration<double>(t1 - t0).count();
            });
        }
    }
    run_cells(work, jobs);
    table.validate();
    return table;
}

ReportTable run_percentage_sweep(const LabeledDataset& train,
                                 const LabeledDataset& test,
                                 const NoiseBank& bank,
                                 const std::vector<double>& percentages,
                                 const VictimConfig& tmpl, int jobs) {
    for (double p : percentages) {
        if (p < 0.0 || p > 100.0) {
            throw ConfigError("percentage sweep: percentages must lie in [0,100]");
        }
    }
    ReportTable table;
    table.corner = "percent";
    for (double p : percentages) table.row_labels.push_back(format_number(p));
    table.col_labels = {"test_acc"};
    table.cells.assign(percentages.size(), 0.0);
    table.runtime_seconds.assign(percentages.size(), 0.0);

    std::vector<std::function<void()>> work;
    for (std::size_t r = 0; r < percentages.size(); ++r) {
        work.push_back([&, r] {
            const auto plan = make_protection_plan(train.num_samples,
                                                   percentages[r], tmpl.seed);
            const auto mixed = apply_protection(train, bank, plan);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const auto model = train_victim(mixed, tmpl);
                table.cells[r] = evaluate_accuracy(model, test);
            } catch (const NumericError& e) {
                throw NumericError("percentage sweep cell (" +
                                   table.row_labels[r] + "): " + e.what());
            }
            const auto t1 = std::chrono::steady_clock::now();
            table.runtime_seconds[r] =
                std::chrono::duration<double>(t1 - t0).count();
        });
    }
    run_cells(work, jobs);
    table.validate();
    return table;
}

} // namespace unlearn
