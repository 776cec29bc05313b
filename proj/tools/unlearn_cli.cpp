#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "unlearn/config.hpp"
#include "unlearn/data_io.hpp"
#include "unlearn/errors.hpp"
#include "unlearn/generator.hpp"
#include "unlearn/harness.hpp"
#include "unlearn/selftest.hpp"

namespace fs = std::filesystem;
using namespace unlearn;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> jobs;
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = RunConfig::from_file(opts.config_path);
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    if (opts.out) cfg.set("out.dir", *opts.out);
    if (opts.jobs) cfg.set("jobs", std::to_string(*opts.jobs));
    return cfg;
}

fs::path prepare_out(const RunConfig& cfg, const std::string& subcommand) {
    const fs::path dir = cfg.out_dir();
    fs::create_directories(dir);
    std::ofstream echo(dir / ("resolved-" + subcommand + ".cfg"),
                       std::ios::trunc);
    echo << cfg.echo();
    return dir;
}

fs::path bank_path(const RunConfig& cfg, const fs::path& dir) {
    const std::string p = cfg.get("bank.path");
    return p.empty() ? dir / "noise.unlb" : fs::path(p);
}

fs::path model_path(const RunConfig& cfg, const fs::path& dir) {
    const std::string p = cfg.get("model.path");
    return p.empty() ? dir / "victim.unlm" : fs::path(p);
}

int cmd_synth(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const auto dir = prepare_out(cfg, "synth");
    const auto data = cfg.resolve_dataset();
    save_csv(data.train, dir / "train.csv");
    save_csv(data.test, dir / "test.csv");
    std::cout << "train=" << data.train.num_samples
              << " test=" << data.test.num_samples << " dim=" << data.train.dim
              << " classes=" << data.train.num_classes << "\n";
    return 0;
}

int cmd_craft(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const auto dir = prepare_out(cfg, "craft");
    const auto data = cfg.resolve_dataset();
    const auto gen_cfg = cfg.generator_config();
    const auto result = train_generator(data.train, gen_cfg);
    const auto bank = emit_noise_bank(result.surrogate, data.train,
                                      gen_cfg.stage1, gen_cfg.method,
                                      gen_cfg.seed);
    save_noise_bank(bank, bank_path(cfg, dir));
    write_trace(result.trace, dir / "trace.csv");
    save_model(result.surrogate, dir / "surrogate.unlm");
    std::cout << "bank=" << bank_path(cfg, dir).string()
              << " samples=" << bank.count()
              << " method=" << method_name(bank.method) << "\n";
    return 0;
}

int cmd_train(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const auto dir = prepare_out(cfg, "train");
    const auto data = cfg.resolve_dataset();
    const auto victim_cfg = cfg.victim_config();
    LabeledDataset train = data.train;
    const double percent = cfg.number("protection.percent");
    if (percent > 0.0) {
        const auto bank = load_noise_bank(bank_path(cfg, dir));
        const auto plan =
            make_protection_plan(train.num_samples, percent, cfg.seed());
        train = apply_protection(train, bank, plan);
    }
    const auto model = train_victim(train, victim_cfg);
    save_model(model, model_path(cfg, dir));
    char line[64];
    std::snprintf(line, sizeof(line), "train_acc=%.2f test_acc=%.2f",
                  evaluate_accuracy(model, train),
                  evaluate_accuracy(model, data.test));
    std::cout << line << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const auto dir = prepare_out(cfg, "eval");
    const auto data = cfg.resolve_dataset();
    const auto model = load_model(model_path(cfg, dir));
    char line[32];
    std::snprintf(line, sizeof(line), "accuracy=%.2f",
                  evaluate_accuracy(model, data.test));
    std::cout << line << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    const RunConfig cfg = load_config(opts);
    const auto dir = prepare_out(cfg, "sweep");
    const auto data = cfg.resolve_dataset();
    const auto victim_cfg = cfg.victim_config();
    const std::string mode = cfg.get("sweep.mode");

    ReportTable table;
    if (mode == "radius") {
        // one bank per generator method, all from the shared config
        GeneratorConfig gen_cfg = cfg.generator_config();
        std::vector<NoiseBank> banks;
        std::vector<std::string> names;
        for (auto method : {GeneratorMethod::Em, GeneratorMethod::Rem,
                            GeneratorMethod::TwoStage}) {
            gen_cfg.method = method;
            const auto result = train_generator(data.train, gen_cfg);
            banks.push_back(emit_noise_bank(result.surrogate, data.train,
                                            gen_cfg.stage1, method,
                                            gen_cfg.seed));
            names.push_back(method_name(method));
        }
        std::vector<NamedBank> named;
        for (std::size_t i = 0; i < banks.size(); ++i) {
            named.push_back({names[i], &banks[i]});
        }
        table = run_radius_sweep(data.train, data.test, named,
                                 cfg.number_list("sweep.radii"), victim_cfg,
                                 cfg.number("sweep.alpha_fraction"),
                                 cfg.jobs());
    } else if (mode == "percentage") {
        const auto gen_cfg = cfg.generator_config();
        NoiseBank bank;
        if (!cfg.get("bank.path").empty()) {
            bank = load_noise_bank(cfg.get("bank.path"));
        } else {
            const auto result = train_generator(data.train, gen_cfg);
            bank = emit_noise_bank(result.surrogate, data.train, gen_cfg.stage1,
                                   gen_cfg.method, gen_cfg.seed);
        }
        table = run_percentage_sweep(data.train, data.test, bank,
                                     cfg.number_list("sweep.percentages"),
                                     victim_cfg, cfg.jobs());
    } else {
        throw ConfigError("sweep.mode: expected radius|percentage");
    }

    write_report(table, dir / "report.csv", ReportFormat::Csv);
    write_report(table, dir / "report.txt", ReportFormat::Text);
    ReportTable runtime = table;
    runtime.cells = table.runtime_seconds;
    runtime.runtime_seconds.clear();
    write_report(runtime, dir / "runtime.csv", ReportFormat::Csv);
    std::cout << render_report(table, ReportFormat::Text);
    return 0;
}

int cmd_selftest(std::uint64_t seed) {
    const auto results = run_selftest(seed);
    bool all_ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "pass " : "FAIL ") << r.name << " ("
                  << r.detail << ")\n";
        all_ok = all_ok && r.passed;
    }
    std::cout << (all_ok ? "selftest: all suites passed\n"
                         : "selftest: FAILURES\n");
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unlearnable-noise laboratory"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::uint64_t selftest_seed = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "run configuration file")
            ->required();
        sub->add_option("--seed", opts.seed, "override the master seed");
        sub->add_option("--out", opts.out, "override the output directory");
        sub->add_option("--jobs", opts.jobs, "cap sweep worker threads");
    };

    auto* synth = app.add_subcommand("synth", "materialize dataset files");
    auto* craft = app.add_subcommand("craft", "train a generator, emit noise");
    auto* train = app.add_subcommand("train", "train a victim model");
    auto* eval = app.add_subcommand("eval", "evaluate a saved victim");
    auto* sweep = app.add_subcommand("sweep", "radius or percentage sweep");
    auto* selftest =
        app.add_subcommand("selftest", "run the built-in property suites");
    for (auto* sub : {synth, craft, train, eval, sweep}) add_common(sub);
    selftest->add_option("--seed", selftest_seed, "selftest seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto one_line = [](std::string s) {
        for (char& c : s) {
            if (c == '\n') c = ';';
        }
        return s;
    };

    try {
        if (synth->parsed()) return cmd_synth(opts);
        if (craft->parsed()) return cmd_craft(opts);
        if (train->parsed()) return cmd_train(opts);
        if (eval->parsed()) return cmd_eval(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
        if (selftest->parsed()) return cmd_selftest(selftest_seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << one_line(e.what()) << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << one_line(e.what()) << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: data: " << one_line(e.what()) << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 2;
}
