#include "unlearn/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace {

constexpr std::uint32_t kBankVersion = 1;
constexpr std::uint32_t kModelVersion = 1;

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

void put_u8(std::string& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void put_u32(std::string& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                       static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.append(b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class ByteReader {
public:
    ByteReader(std::string data, std::string name)
        : data_(std::move(data)), name_(std::move(name)) {}

    std::size_t offset() const { return off_; }
    std::size_t remaining() const { return data_.size() - off_; }

    void need(std::size_t n, const char* what) const {
        if (off_ + n > data_.size()) {
            throw DataError(name_ + ": truncated while reading " + what +
                            " at byte offset " + std::to_string(off_));
        }
    }

    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(data_[off_++]);
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(
                     static_cast<std::uint8_t>(data_[off_ + i]))
                 << (8 * i);
        }
        off_ += 4;
        return v;
    }

    std::uint32_t u32_be(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) |
                static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[off_ + i]));
        }
        off_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        const std::uint64_t lo = u32(what);
        const std::uint64_t hi = u32(what);
        return lo | (hi << 32);
    }

    double f64(const char* what) {
        const std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data_.substr(off_, n);
        off_ += n;
        return s;
    }

    const std::string& name() const { return name_; }

private:
    std::string data_;
    std::string name_;
    std::size_t off_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return std::move(os).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::uint32_t payload_crc(const std::string& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

LabeledDataset synth_blobs(int num_classes, std::size_t per_class,
                           std::size_t dim, double separation,
                           std::uint64_t seed) {
    if (num_classes < 2 || per_class < 1 || dim < 1) {
        throw ConfigError("synth_blobs: parameters must be positive (K >= 2)");
    }
    if (separation < 0.0) {
        throw ConfigError("synth_blobs: separation must be >= 0");
    }
    Rng frame_rng(derive_seed(seed, 0xf7a3));
    std::vector<double> means(static_cast<std::size_t>(num_classes) * dim);
    for (int k = 0; k < num_classes; ++k) {
        double norm = 0.0;
        std::vector<double> dir(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            dir[j] = frame_rng.normal();
            norm += dir[j] * dir[j];
        }
        norm = std::sqrt(std::max(norm, 1e-300));
        for (std::size_t j = 0; j < dim; ++j) {
            means[k * dim + j] = separation * dir[j] / norm;
        }
    }

    LabeledDataset data;
    data.num_classes = num_classes;
    data.dim = dim;
    data.num_samples = static_cast<std::size_t>(num_classes) * per_class;
    data.features.resize(data.num_samples * dim);
    data.labels.resize(data.num_samples);
    Rng sample_rng(derive_seed(seed, 0x5a3b));
    std::size_t i = 0;
    for (int k = 0; k < num_classes; ++k) {
        for (std::size_t s = 0; s < per_class; ++s, ++i) {
            data.labels[i] = k + 1;
            for (std::size_t j = 0; j < dim; ++j) {
                data.features[i * dim + j] =
                    means[k * dim + j] + sample_rng.normal();
            }
        }
    }

    // affine rescale into [0,1]
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (double v : data.features) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double span = std::max(mx - mn, 1e-12);
    for (double& v : data.features) {
        v = std::clamp((v - mn) / span, 0.0, 1.0);
    }
    data.lo = 0.0;
    data.hi = 1.0;
    data.validate();
    return data;
}

LabeledDataset load_idx(const std::filesystem::path& images,
                        const std::filesystem::path& labels) {
    ByteReader img(read_file(images), images.string());
    ByteReader lab(read_file(labels), labels.string());

    const std::uint32_t img_magic = img.u32_be("magic");
    if (img_magic != 0x00000803) {
        throw DataError(img.name() + ": bad magic 0x" +
                        [&] { char b[16]; std::snprintf(b, 16, "%08x", img_magic); return std::string(b); }() +
                        " at byte offset 0 (want 00000803)");
    }
    const std::uint32_t lab_magic = lab.u32_be("magic");
    if (lab_magic != 0x00000801) {
        throw DataError(lab.name() + ": bad magic at byte offset 0 "
                        "(want 00000801)");
    }
    const std::uint32_t n_img = img.u32_be("image count");
    const std::uint32_t rows = img.u32_be("rows");
    const std::uint32_t cols = img.u32_be("cols");
    const std::uint32_t n_lab = lab.u32_be("label count");
    if (n_img != n_lab) {
        throw DataError("idx pair: image count " + std::to_string(n_img) +
                        " != label count " + std::to_string(n_lab));
    }
    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    const std::string pixels =
        img.bytes(static_cast<std::size_t>(n_img) * dim, "pixel payload");
    if (img.remaining() != 0) {
        throw DataError(img.name() + ": trailing bytes at offset " +
                        std::to_string(img.offset()));
    }
    const std::string raw_labels = lab.bytes(n_lab, "label payload");
    if (lab.remaining() != 0) {
        throw DataError(lab.name() + ": trailing bytes at offset " +
                        std::to_string(lab.offset()));
    }

    LabeledDataset data;
    data.num_samples = n_img;
    data.dim = dim;
    data.lo = 0.0;
    data.hi = 1.0;
    data.features.resize(data.num_samples * dim);
    for (std::size_t j = 0; j < data.features.size(); ++j) {
        data.features[j] =
            static_cast<double>(static_cast<std::uint8_t>(pixels[j])) / 255.0;
    }
    int max_label = 0;
    data.labels.resize(n_lab);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        data.labels[i] = static_cast<std::uint8_t>(raw_labels[i]) + 1;
        max_label = std::max(max_label, data.labels[i]);
    }
    data.num_classes = std::max(max_label, 2);
    data.validate();
    return data;
}

LabeledDataset load_csv(const std::filesystem::path& path, double lo,
                        double hi) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    LabeledDataset data;
    data.lo = lo;
    data.hi = hi;
    std::string line;
    std::size_t lineno = 0;
    int max_label = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(is, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": bad numeric cell '" + cell + "'");
            }
        }
        if (row.size() < 2) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": need a label and at least one feature");
        }
        const double label_val = row[0];
        if (label_val != std::floor(label_val) || label_val < 1.0) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": label must be an integer >= 1");
        }
        if (data.num_samples == 0) {
            data.dim = row.size() - 1;
        } else if (row.size() - 1 != data.dim) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": feature count differs from first row");
        }
        for (std::size_t j = 1; j < row.size(); ++j) {
            if (!(row[j] >= lo && row[j] <= hi)) {
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": feature outside declared bounds");
            }
        }
        data.labels.push_back(static_cast<int>(label_val));
        max_label = std::max(max_label, data.labels.back());
        data.features.insert(data.features.end(), row.begin() + 1, row.end());
        ++data.num_samples;
    }
    if (data.num_samples == 0) {
        throw DataError(path.string() + ": no data rows");
    }
    data.num_classes = std::max(max_label, 2);
    data.validate();
    return data;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
    std::string out;
    for (std::size_t i = 0; i < data.num_samples; ++i) {
        out += std::to_string(data.labels[i]);
        for (std::size_t j = 0; j < data.dim; ++j) {
            out += ',';
            out += format_double(data.features[i * data.dim + j]);
        }
        out += '\n';
    }
    write_file(path, out);
}

void save_noise_bank(const NoiseBank& bank, const std::filesystem::path& path) {
    std::string payload;
    payload.reserve(bank.deltas.size() * 8);
    for (double d : bank.deltas) put_f64(payload, d);

    std::string out;
    out += "UNLB";
    put_u32(out, kBankVersion);
    put_u64(out, bank.count());
    put_u32(out, static_cast<std::uint32_t>(bank.dims.size()));
    for (auto d : bank.dims) put_u32(out, d);
    put_f64(out, bank.budget.radius);
    put_u32(out, bank.dataset_hash);
    put_u64(out, bank.seed);
    put_u8(out, static_cast<std::uint8_t>(bank.method));
    put_f64(out, bank.budget.step);
    put_u32(out, static_cast<std::uint32_t>(bank.budget.steps));
    put_u8(out, bank.budget.init == PerturbInit::RandomUniform ? 1 : 0);
    out += payload;
    put_u32(out, payload_crc(payload));
    write_file(path, out);
}

NoiseBank load_noise_bank(const std::filesystem::path& path) {
    ByteReader r(read_file(path), path.string());
    if (r.bytes(4, "magic") != "UNLB") {
        throw DataError(path.string() + ": bad magic at byte offset 0");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kBankVersion) {
        throw DataError(path.string() + ": unsupported noise bank version " +
                        std::to_string(version));
    }
    NoiseBank bank;
    const std::uint64_t count = r.u64("sample count");
    const std::uint32_t rank = r.u32("rank");
    std::size_t sample_size = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        bank.dims.push_back(r.u32("dimension"));
        sample_size *= bank.dims.back();
    }
    bank.budget.radius = r.f64("radius");
    bank.dataset_hash = r.u32("dataset hash");
    bank.seed = r.u64("seed");
    const std::uint8_t method = r.u8("method tag");
    if (method > 2) {
        throw DataError(path.string() + ": unknown method tag " +
                        std::to_string(method));
    }
    bank.method = static_cast<GeneratorMethod>(method);
    bank.budget.step = r.f64("step size");
    bank.budget.steps = static_cast<int>(r.u32("step count"));
    bank.budget.init =
        r.u8("init mode") ? PerturbInit::RandomUniform : PerturbInit::Zero;

    const std::size_t payload_len = count * sample_size * 8;
    const std::string payload = r.bytes(payload_len, "payload");
    const std::uint32_t stored_crc = r.u32("payload CRC");
    if (r.remaining() != 0) {
        throw DataError(path.string() + ": trailing bytes at offset " +
                        std::to_string(r.offset()));
    }
    if (payload_crc(payload) != stored_crc) {
        throw DataError(path.string() + ": payload CRC mismatch (corrupt file)");
    }
    bank.deltas.resize(count * sample_size);
    std::memcpy(bank.deltas.data(), payload.data(), payload.size());
    return bank;
}

void save_model(const ModelState& model, const std::filesystem::path& path) {
    std::string out;
    out += "UNLM";
    put_u32(out, kModelVersion);
    const std::string desc = model.arch.descriptor();
    put_u32(out, static_cast<std::uint32_t>(desc.size()));
    out += desc;
    put_u64(out, model.seed);
    std::string payload;
    payload.reserve(model.params.size() * 8);
    for (double p : model.params) put_f64(payload, p);
    put_u64(out, model.params.size());
    out += payload;
    put_u32(out, payload_crc(payload));
    write_file(path, out);
}

ModelState load_model(const std::filesystem::path& path) {
    ByteReader r(read_file(path), path.string());
    if (r.bytes(4, "magic") != "UNLM") {
        throw DataError(path.string() + ": bad magic at byte offset 0");
    }
    const std::uint32_t version = r.u32("version");
    if (version != kModelVersion) {
        throw DataError(path.string() + ": unsupported model version " +
                        std::to_string(version));
    }
    const std::uint32_t desc_len = r.u32("descriptor length");
    ModelState model;
    model.arch = Architecture::parse(r.bytes(desc_len, "descriptor"));
    model.seed = r.u64("seed");
    const std::uint64_t n_params = r.u64("parameter count");
    if (n_params != model.arch.param_count()) {
        throw DataError(path.string() + ": parameter count " +
                        std::to_string(n_params) +
                        " does not match architecture");
    }
    const std::string payload = r.bytes(n_params * 8, "parameters");
    const std::uint32_t stored_crc = r.u32("parameter CRC");
    if (payload_crc(payload) != stored_crc) {
        throw DataError(path.string() + ": parameter CRC mismatch");
    }
    model.params.resize(n_params);
    std::memcpy(model.params.data(), payload.data(), payload.size());
    return model;
}

std::string render_report(const ReportTable& table, ReportFormat format) {
    table.validate();
    const std::size_t rows = table.row_labels.size();
    const std::size_t cols = table.col_labels.size();
    auto cell_text = [&](std::size_t r, std::size_t c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", table.at(r, c));
        return std::string(buf);
    };

    if (format == ReportFormat::Csv) {
        std::string out = table.corner;
        for (const auto& c : table.col_labels) {
            out += ',';
            out += c;
        }
        out += '\n';
        for (std::size_t r = 0; r < rows; ++r) {
            out += table.row_labels[r];
            for (std::size_t c = 0; c < cols; ++c) {
                out += ',';
                out += cell_text(r, c);
            }
            out += '\n';
        }
        return out;
    }

    // aligned text
    std::vector<std::size_t> widths(cols + 1, table.corner.size());
    for (const auto& rl : table.row_labels) {
        widths[0] = std::max(widths[0], rl.size());
    }
    for (std::size_t c = 0; c < cols; ++c) {
        widths[c + 1] = table.col_labels[c].size();
        for (std::size_t r = 0; r < rows; ++r) {
            widths[c + 1] = std::max(widths[c + 1], cell_text(r, c).size());
        }
    }
    auto pad = [](const std::string& s, std::size_t w) {
        return std::string(w - s.size(), ' ') + s;
    };
    std::string out = pad(table.corner, widths[0]);
    for (std::size_t c = 0; c < cols; ++c) {
        out += "  " + pad(table.col_labels[c], widths[c + 1]);
    }
    out += '\n';
    for (std::size_t r = 0; r < rows; ++r) {
        out += pad(table.row_labels[r], widths[0]);
        for (std::size_t c = 0; c < cols; ++c) {
            out += "  " + pad(cell_text(r, c), widths[c + 1]);
        }
        out += '\n';
    }
    return out;
}

void write_report(const ReportTable& table, const std::filesystem::path& path,
                  ReportFormat format) {
    write_file(path, render_report(table, format));
}

void write_trace(const GeneratorTrace& trace,
                 const std::filesystem::path& path) {
    std::string out = "iter,ce_loss,asr_term,clean_acc,r_s\n";
    for (const auto& rec : trace.records) {
        out += std::to_string(rec.iteration);
        out += ',';
        out += format_double(rec.ce_loss);
        out += ',';
        out += format_double(rec.asr_term);
        out += ',';
        out += format_double(rec.clean_acc);
        out += ',';
        out += format_double(rec.r_s);
        out += '\n';
    }
    write_file(path, out);
}

} // namespace unlearn
