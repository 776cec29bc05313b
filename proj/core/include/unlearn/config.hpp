#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/generator.hpp"
#include "unlearn/harness.hpp"

namespace unlearn {

// Plain-text run configuration: one key=value per line, '#' comments.
// Every key has a default; unknown keys are rejected, and all validation
// failures are reported in one ConfigError.
class RunConfig {
public:
    RunConfig(); // defaults only

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_string(const std::string& text,
                                 const std::string& origin = "<config>");

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;

    // Fully-resolved config (defaults included), re-feedable.
    std::string echo() const;

    // Typed accessors; collect() gathers per-key complaints.
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    std::uint64_t seed() const;
    std::vector<double> number_list(const std::string& key) const;

    // Derived domain configs. Each throws ConfigError listing every
    // offending key at once.
    GeneratorConfig generator_config() const;
    VictimConfig victim_config() const;
    PerturbationBudget stage_budget(const std::string& prefix) const;

    struct DataBundle {
        LabeledDataset train;
        LabeledDataset test;
    };
    // Synthesizes or loads per dataset.source, splitting when no explicit
    // test files are given.
    DataBundle resolve_dataset() const;

    std::filesystem::path out_dir() const;
    int jobs() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace unlearn
