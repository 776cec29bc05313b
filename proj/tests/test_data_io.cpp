#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "unlearn/data_io.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/generator.hpp"
#include "unlearn/harness.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const auto dir = fs::temp_directory_path() / "unlearn_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return std::move(os).str();
}

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// big-endian u32 for IDX fixtures
void put_be(std::string& s, std::uint32_t v) {
    s.push_back(static_cast<char>(v >> 24));
    s.push_back(static_cast<char>(v >> 16));
    s.push_back(static_cast<char>(v >> 8));
    s.push_back(static_cast<char>(v));
}

NoiseBank random_bank(Rng& rng, std::size_t count, std::size_t dim) {
    NoiseBank bank;
    bank.dataset_hash = static_cast<std::uint32_t>(rng.next_u64());
    bank.dims = {static_cast<std::uint32_t>(dim)};
    bank.budget = {0.1, 0.02, 5, PerturbInit::Zero};
    bank.method = GeneratorMethod::TwoStage;
    bank.seed = rng.next_u64();
    bank.deltas.resize(count * dim);
    for (double& d : bank.deltas) d = rng.uniform(-0.1, 0.1);
    return bank;
}

} // namespace

TEST_CASE("synth_blobs contracts") {
    const auto tiny = synth_blobs(2, 1, 2, 1.0, 3);
    CHECK(tiny.num_samples == 2);
    CHECK(tiny.labels == std::vector<int>{1, 2});
    for (double v : tiny.features) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    const auto a = synth_blobs(3, 50, 10, 4.0, 9);
    const auto b = synth_blobs(3, 50, 10, 4.0, 9);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    const auto c = synth_blobs(3, 50, 10, 4.0, 10);
    CHECK(a.features != c.features);

    CHECK_THROWS_AS(synth_blobs(1, 10, 2, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(synth_blobs(2, 0, 2, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(synth_blobs(2, 10, 2, -1.0, 0), ConfigError);
}

TEST_CASE("zero separation keeps classes at chance") {
    const auto data = synth_blobs(2, 100, 6, 0.0, 31);
    const auto split = split_dataset(data, 0.3, 31);
    VictimConfig cfg;
    cfg.arch = Architecture{6, {8}, 2, Activation::Tanh};
    cfg.epochs = 15;
    cfg.eta = 0.2;
    cfg.batch_size = 20;
    cfg.seed = 4;
    const auto model = train_victim(split.train, cfg);
    // overlapping clusters: test accuracy stays near the 50% chance level
    CHECK(evaluate_accuracy(model, split.test) < 70.0);
}

TEST_CASE("dataset split is a partition") {
    const auto data = synth_blobs(3, 40, 5, 3.0, 12);
    const auto split = split_dataset(data, 0.25, 7);
    CHECK(split.test.num_samples == 30);
    CHECK(split.train.num_samples == 90);
    CHECK(split.train.num_classes == 3);
    CHECK_THROWS_AS(split_dataset(data, 1.5, 7), ConfigError);
}

TEST_CASE("IDX ingestion") {
    const auto dir = tmp_dir();

    // 2 images of 2x2, pixel values chosen to exercise /255 scaling
    std::string images;
    put_be(images, 0x00000803);
    put_be(images, 2);
    put_be(images, 2);
    put_be(images, 2);
    for (int v : {0, 51, 102, 255, 10, 20, 30, 40}) {
        images.push_back(static_cast<char>(v));
    }
    std::string labels;
    put_be(labels, 0x00000801);
    put_be(labels, 2);
    labels.push_back(2);
    labels.push_back(0);
    write_bytes(dir / "img.idx", images);
    write_bytes(dir / "lab.idx", labels);

    const auto data = load_idx(dir / "img.idx", dir / "lab.idx");
    CHECK(data.num_samples == 2);
    CHECK(data.dim == 4);
    CHECK(data.features[0] == 0.0);
    CHECK(data.features[1] == doctest::Approx(51.0 / 255.0));
    CHECK(data.features[3] == 1.0);
    CHECK(data.labels == std::vector<int>{3, 1}); // remapped to 1-based
    CHECK(data.num_classes == 3);

    SUBCASE("bad magic") {
        std::string broken = images;
        broken[3] = 0x05;
        write_bytes(dir / "bad.idx", broken);
        CHECK_THROWS_AS(load_idx(dir / "bad.idx", dir / "lab.idx"), DataError);
    }
    SUBCASE("truncated payload names the offset") {
        write_bytes(dir / "short.idx", images.substr(0, images.size() - 3));
        CHECK_THROWS_AS(load_idx(dir / "short.idx", dir / "lab.idx"), DataError);
    }
    SUBCASE("count mismatch") {
        std::string three;
        put_be(three, 0x00000801);
        put_be(three, 3);
        three.append(3, '\0');
        write_bytes(dir / "lab3.idx", three);
        CHECK_THROWS_AS(load_idx(dir / "img.idx", dir / "lab3.idx"), DataError);
    }
}

TEST_CASE("CSV ingestion") {
    const auto dir = tmp_dir();

    SUBCASE("round-trip preserves every byte of data") {
        const auto data = synth_blobs(3, 25, 7, 2.0, 44);
        save_csv(data, dir / "rt.csv");
        const auto back = load_csv(dir / "rt.csv");
        CHECK(back.features == data.features);
        CHECK(back.labels == data.labels);
        CHECK(back.num_classes == data.num_classes);
    }

    SUBCASE("empty file is rejected") {
        write_bytes(dir / "empty.csv", "# only a comment\n");
        CHECK_THROWS_AS(load_csv(dir / "empty.csv"), DataError);
    }

    SUBCASE("bad label names the line") {
        write_bytes(dir / "badlabel.csv", "1,0.5,0.5\n0,0.1,0.2\n");
        try {
            load_csv(dir / "badlabel.csv");
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }

    SUBCASE("out-of-bounds features are rejected, not clamped") {
        write_bytes(dir / "oob.csv", "1,0.5,1.5\n");
        CHECK_THROWS_AS(load_csv(dir / "oob.csv"), DataError);
    }

    SUBCASE("ragged rows are rejected") {
        write_bytes(dir / "ragged.csv", "1,0.5,0.5\n2,0.1\n");
        CHECK_THROWS_AS(load_csv(dir / "ragged.csv"), DataError);
    }
}

TEST_CASE("noise bank persistence") {
    const auto dir = tmp_dir();
    Rng rng(55);

    SUBCASE("round-trip is bitwise identity for random banks") {
        for (int t = 0; t < 100; ++t) {
            const auto bank = random_bank(rng, 1 + rng.below(8), 1 + rng.below(6));
            save_noise_bank(bank, dir / "bank.unlb");
            CHECK(load_noise_bank(dir / "bank.unlb") == bank);
        }
    }

    SUBCASE("zero-sample bank round-trips") {
        NoiseBank empty;
        empty.dims = {4};
        empty.budget = {0.1, 0.02, 3, PerturbInit::Zero};
        save_noise_bank(empty, dir / "empty.unlb");
        const auto back = load_noise_bank(dir / "empty.unlb");
        CHECK(back == empty);
        CHECK(back.count() == 0);
    }

    SUBCASE("single corrupt payload byte is detected") {
        const auto bank = random_bank(rng, 6, 5);
        save_noise_bank(bank, dir / "corrupt.unlb");
        auto bytes = slurp(dir / "corrupt.unlb");
        bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x01);
        write_bytes(dir / "corrupt.unlb", bytes);
        CHECK_THROWS_AS(load_noise_bank(dir / "corrupt.unlb"), DataError);
    }

    SUBCASE("unknown version is rejected") {
        const auto bank = random_bank(rng, 2, 3);
        save_noise_bank(bank, dir / "ver.unlb");
        auto bytes = slurp(dir / "ver.unlb");
        bytes[4] = 9;
        write_bytes(dir / "ver.unlb", bytes);
        CHECK_THROWS_AS(load_noise_bank(dir / "ver.unlb"), DataError);
    }

    SUBCASE("save is byte-deterministic") {
        const auto bank = random_bank(rng, 4, 4);
        save_noise_bank(bank, dir / "a.unlb");
        save_noise_bank(bank, dir / "b.unlb");
        CHECK(slurp(dir / "a.unlb") == slurp(dir / "b.unlb"));
    }
}

TEST_CASE("model persistence round-trip") {
    const auto dir = tmp_dir();
    const auto model = init_model(Architecture::parse("mlp 6 9 4 tanh"), 77);
    save_model(model, dir / "m.unlm");
    const auto back = load_model(dir / "m.unlm");
    CHECK(back.arch == model.arch);
    CHECK(back.params == model.params);
    CHECK(back.seed == model.seed);

    auto bytes = slurp(dir / "m.unlm");
    bytes[bytes.size() - 10] ^= 0x40;
    write_bytes(dir / "m.unlm", bytes);
    CHECK_THROWS_AS(load_model(dir / "m.unlm"), DataError);
}

TEST_CASE("report writing") {
    const auto dir = tmp_dir();

    SUBCASE("1x1 table formats the fixture cell") {
        ReportTable t;
        t.corner = "rho_a";
        t.row_labels = {"0"};
        t.col_labels = {"clean"};
        t.cells = {94.66};
        write_report(t, dir / "one.csv", ReportFormat::Csv);
        CHECK(slurp(dir / "one.csv") == "rho_a,clean\n0,94.66\n");
    }

    SUBCASE("empty-row table writes the header only") {
        ReportTable t;
        t.corner = "percent";
        t.col_labels = {"test_acc"};
        write_report(t, dir / "hdr.csv", ReportFormat::Csv);
        CHECK(slurp(dir / "hdr.csv") == "percent,test_acc\n");
    }

    SUBCASE("identical tables produce identical bytes") {
        ReportTable t;
        t.corner = "percent";
        t.row_labels = {"0", "50"};
        t.col_labels = {"test_acc"};
        t.cells = {91.2345, 40.0};
        write_report(t, dir / "x.csv", ReportFormat::Csv);
        write_report(t, dir / "y.csv", ReportFormat::Csv);
        CHECK(slurp(dir / "x.csv") == slurp(dir / "y.csv"));
        write_report(t, dir / "x.txt", ReportFormat::Text);
        const auto text = slurp(dir / "x.txt");
        CHECK(text.find("91.23") != std::string::npos);
        CHECK(text.find("test_acc") != std::string::npos);
    }
}

TEST_CASE("trace writing") {
    const auto dir = tmp_dir();
    GeneratorTrace trace;
    trace.records.push_back({1, 2.5, 0.1, 33.3, 0.2});
    trace.records.push_back({2, 2.0, 0.08, 35.0, 0.15});
    write_trace(trace, dir / "trace.csv");
    const auto text = slurp(dir / "trace.csv");
    CHECK(text.rfind("iter,ce_loss,asr_term,clean_acc,r_s\n", 0) == 0);
    CHECK(text.find("\n2,2,") != std::string::npos);
}
