#include <doctest.h>

#include <string>

#include "unlearn/config.hpp"
#include "unlearn/errors.hpp"

using namespace unlearn;

TEST_CASE("defaults produce valid domain configs") {
    const RunConfig cfg;
    CHECK_NOTHROW(cfg.generator_config());
    CHECK_NOTHROW(cfg.victim_config());
    CHECK(cfg.seed() == 1);
    CHECK(cfg.jobs() == 1);
    const auto g = cfg.generator_config();
    CHECK(g.stage1.radius == doctest::Approx(8.0 / 255.0).epsilon(1e-12));
    CHECK(g.stage2.radius == doctest::Approx(4.0 / 255.0).epsilon(1e-12));
    CHECK(g.asr_weight == 1.0);
}

TEST_CASE("unknown keys are rejected with their line numbers") {
    try {
        RunConfig::from_string("seed = 3\nbogus.key = 1\nother = x\n", "t.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("t.cfg:2") != std::string::npos);
        CHECK(msg.find("bogus.key") != std::string::npos);
        CHECK(msg.find("t.cfg:3") != std::string::npos);
        CHECK(msg.find("other") != std::string::npos);
    }
}

TEST_CASE("comments and blank lines are skipped") {
    const auto cfg = RunConfig::from_string(
        "# a comment\n\n  seed = 42  \ngenerator.method = em\n");
    CHECK(cfg.seed() == 42);
    CHECK(cfg.get("generator.method") == "em");
}

TEST_CASE("echo round-trips bitwise") {
    auto cfg = RunConfig::from_string("seed = 9\nstage1.radius = 0.25\n");
    const auto echoed = cfg.echo();
    const auto again = RunConfig::from_string(echoed);
    CHECK(again.echo() == echoed);
    CHECK(again.get("stage1.radius") == "0.25");
}

TEST_CASE("typed accessors validate") {
    auto cfg = RunConfig::from_string("generator.eta = fast\n");
    CHECK_THROWS_AS(cfg.number("generator.eta"), ConfigError);
    cfg.set("generator.eta", "0.5");
    CHECK(cfg.number("generator.eta") == 0.5);
    cfg.set("sweep.radii", "0, 0.1, 0.2");
    CHECK(cfg.number_list("sweep.radii") ==
          std::vector<double>{0.0, 0.1, 0.2});
    cfg.set("sweep.radii", "0,,1");
    CHECK_THROWS_AS(cfg.number_list("sweep.radii"), ConfigError);
}

TEST_CASE("invalid radius ordering is caught at config level") {
    auto cfg = RunConfig::from_string(
        "stage1.radius = 0.1\nstage2.radius = 0.2\n");
    CHECK_THROWS_AS(cfg.generator_config(), ConfigError);
}

TEST_CASE("validation lists every offending key at once") {
    auto cfg = RunConfig::from_string(
        "generator.method = banana\nstage1.init = maybe\nstage2.init = never\n");
    try {
        cfg.generator_config();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("banana") != std::string::npos);
        CHECK(msg.find("stage1.init") != std::string::npos);
        CHECK(msg.find("stage2.init") != std::string::npos);
    }
}

TEST_CASE("synthetic dataset resolution is deterministic") {
    auto cfg = RunConfig::from_string(
        "dataset.per_class = 20\ndataset.dim = 5\ndataset.classes = 3\n");
    const auto a = cfg.resolve_dataset();
    const auto b = cfg.resolve_dataset();
    CHECK(a.train.features == b.train.features);
    CHECK(a.test.features == b.test.features);
    CHECK(a.train.num_samples + a.test.num_samples == 60);

    cfg.set("dataset.source", "teapot");
    CHECK_THROWS_AS(cfg.resolve_dataset(), ConfigError);
}

TEST_CASE("csv source requires a path") {
    auto cfg = RunConfig::from_string("dataset.source = csv\n");
    CHECK_THROWS_AS(cfg.resolve_dataset(), ConfigError);
}
