#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "unlearn/dataset.hpp"
#include "unlearn/generator.hpp"
#include "unlearn/harness.hpp"
#include "unlearn/model.hpp"
#include "unlearn/noise_bank.hpp"

namespace unlearn {

// K isotropic clusters with means on a seeded random direction frame scaled
// by `separation`, affinely rescaled into [0,1]. Deterministic per seed.
LabeledDataset synth_blobs(int num_classes, std::size_t per_class,
                           std::size_t dim, double separation,
                           std::uint64_t seed);

// MNIST-style IDX pair: big-endian magic 0x00000803 / 0x00000801, dims,
// unsigned bytes scaled to [0,1]. Labels remapped to {1..K}.
LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels);

// "label,feature,feature,..." rows; '#' comment lines allowed.
LabeledDataset load_csv(const std::filesystem::path& path, double lo = 0.0,
                        double hi = 1.0);
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);

// Binary noise-bank format: magic "UNLB", version, count, rank + dims,
// rho_u, crafting metadata, little-endian f64 payload, CRC-32 of payload.
void save_noise_bank(const NoiseBank& bank, const std::filesystem::path& path);
NoiseBank load_noise_bank(const std::filesystem::path& path);

// Binary model format: magic "UNLM", version, descriptor line, seed, params.
void save_model(const ModelState& model, const std::filesystem::path& path);
ModelState load_model(const std::filesystem::path& path);

enum class ReportFormat { Csv, Text };

// Byte-deterministic: CSV with a header row, '.' decimal, two decimals; or
// an aligned plain-text rendering.
void write_report(const ReportTable& table, const std::filesystem::path& path,
                  ReportFormat format);
std::string render_report(const ReportTable& table, ReportFormat format);

// One row per iteration: iter,ce_loss,asr_term,clean_acc,r_s.
void write_trace(const GeneratorTrace& trace,
                 const std::filesystem::path& path);

} // namespace unlearn
