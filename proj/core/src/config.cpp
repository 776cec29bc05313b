#include "unlearn/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "unlearn/data_io.hpp"
#include "unlearn/errors.hpp"

namespace unlearn {

namespace {

// Every known key with its default. Radii default to the paper-scale
// 8/255 and 4/255 budgets; desk-scale configs override them.
const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"seed", "1"},
        {"jobs", "1"},
        {"out.dir", "out"},

        {"dataset.source", "synthetic-blobs"},
        {"dataset.classes", "3"},
        {"dataset.per_class", "500"},
        {"dataset.dim", "20"},
        {"dataset.separation", "4"},
        {"dataset.lo", "0"},
        {"dataset.hi", "1"},
        {"dataset.test_fraction", "0.25"},
        {"dataset.train_csv", ""},
        {"dataset.test_csv", ""},
        {"dataset.images", ""},
        {"dataset.labels", ""},
        {"dataset.test_images", ""},
        {"dataset.test_labels", ""},
        {"dataset.limit", "0"},

        {"generator.arch", "mlp 20 32 3 tanh"},
        {"generator.method", "two-stage"},
        {"generator.iterations", "400"},
        {"generator.eta", "0.2"},
        {"generator.batch", "64"},
        {"generator.lambda", "1"},

        {"stage1.radius", "0.031372549019607843"},
        {"stage1.alpha", "0.0062745098039215685"},
        {"stage1.steps", "10"},
        {"stage1.init", "zero"},

        {"stage2.radius", "0.01568627450980392"},
        {"stage2.alpha", "0.0031372549019607846"},
        {"stage2.steps", "5"},
        {"stage2.init", "random"},

        {"victim.arch", "mlp 20 32 3 tanh"},
        {"victim.epochs", "30"},
        {"victim.eta", "0.2"},
        {"victim.batch", "64"},
        {"victim.radius", "0"},
        {"victim.alpha", "0.004"},
        {"victim.steps", "5"},

        {"protection.percent", "100"},
        {"bank.path", ""},
        {"model.path", ""},

        {"sweep.mode", "radius"},
        {"sweep.radii", "0"},
        {"sweep.percentages", "0,50,100"},
        {"sweep.alpha_fraction", "0.25"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

PerturbInit parse_init(const std::string& v, const std::string& key,
                       std::vector<std::string>& problems) {
    if (v == "zero") return PerturbInit::Zero;
    if (v == "random") return PerturbInit::RandomUniform;
    problems.push_back(key + ": expected zero|random, got '" + v + "'");
    return PerturbInit::Zero;
}

void raise_if_any(const std::vector<std::string>& problems) {
    if (problems.empty()) return;
    std::string msg = "config validation failed:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
}

} // namespace

RunConfig::RunConfig() : values_(default_values()) {}

RunConfig RunConfig::from_string(const std::string& text,
                                 const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> problems;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            problems.push_back(origin + ":" + std::to_string(lineno) +
                               ": expected key=value");
            continue;
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!default_values().contains(key)) {
            problems.push_back(origin + ":" + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
            continue;
        }
        cfg.values_[key] = value;
    }
    raise_if_any(problems);
    return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return from_string(os.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!default_values().contains(key)) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    return it->second;
}

std::string RunConfig::echo() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

double RunConfig::number(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long RunConfig::integer(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t RunConfig::seed() const {
    const std::string& v = get("seed");
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("seed: expected an unsigned integer, got '" + v + "'");
    }
}

std::vector<double> RunConfig::number_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::istringstream is(v);
    std::string cell;
    while (std::getline(is, cell, ',')) {
        cell = trim(cell);
        try {
            std::size_t used = 0;
            const double x = std::stod(cell, &used);
            if (used != cell.size() || !std::isfinite(x)) {
                throw std::invalid_argument(cell);
            }
            out.push_back(x);
        } catch (const std::exception&) {
            throw ConfigError(key + ": bad list entry '" + cell + "'");
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

PerturbationBudget RunConfig::stage_budget(const std::string& prefix) const {
    std::vector<std::string> problems;
    PerturbationBudget b;
    b.radius = number(prefix + ".radius");
    b.step = number(prefix + ".alpha");
    b.steps = static_cast<int>(integer(prefix + ".steps"));
    b.init = parse_init(get(prefix + ".init"), prefix + ".init", problems);
    raise_if_any(problems);
    b.validate();
    return b;
}

GeneratorConfig RunConfig::generator_config() const {
    std::vector<std::string> problems;
    GeneratorConfig g;
    try {
        g.arch = Architecture::parse(get("generator.arch"));
    } catch (const ConfigError& e) {
        problems.push_back(std::string("generator.arch: ") + e.what());
    }
    g.iterations = static_cast<int>(integer("generator.iterations"));
    g.eta = number("generator.eta");
    g.batch_size = static_cast<int>(integer("generator.batch"));
    g.asr_weight = number("generator.lambda");
    try {
        g.method = parse_method(get("generator.method"));
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    try {
        g.stage1 = stage_budget("stage1");
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    try {
        g.stage2 = stage_budget("stage2");
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    g.seed = seed();
    raise_if_any(problems);
    g.validate();
    return g;
}

VictimConfig RunConfig::victim_config() const {
    VictimConfig v;
    v.arch = Architecture::parse(get("victim.arch"));
    v.epochs = static_cast<int>(integer("victim.epochs"));
    v.eta = number("victim.eta");
    v.batch_size = static_cast<int>(integer("victim.batch"));
    v.adversary.radius = number("victim.radius");
    v.adversary.step = number("victim.alpha");
    v.adversary.steps = static_cast<int>(integer("victim.steps"));
    v.adversary.init = PerturbInit::RandomUniform;
    v.seed = seed();
    v.validate();
    return v;
}

RunConfig::DataBundle RunConfig::resolve_dataset() const {
    const std::string source = get("dataset.source");
    const double test_fraction = number("dataset.test_fraction");
    DataBundle out;
    if (source == "synthetic-blobs") {
        const auto full = synth_blobs(
            static_cast<int>(integer("dataset.classes")),
            static_cast<std::size_t>(integer("dataset.per_class")),
            static_cast<std::size_t>(integer("dataset.dim")),
            number("dataset.separation"), seed());
        auto split = split_dataset(full, test_fraction, seed());
        out.train = std::move(split.train);
        out.test = std::move(split.test);
    } else if (source == "csv") {
        const std::string train_path = get("dataset.train_csv");
        if (train_path.empty()) {
            throw ConfigError("dataset.train_csv required for source=csv");
        }
        const double lo = number("dataset.lo");
        const double hi = number("dataset.hi");
        const auto train = load_csv(train_path, lo, hi);
        const std::string test_path = get("dataset.test_csv");
        if (!test_path.empty()) {
            out.train = train;
            out.test = load_csv(test_path, lo, hi);
        } else {
            auto split = split_dataset(train, test_fraction, seed());
            out.train = std::move(split.train);
            out.test = std::move(split.test);
        }
    } else if (source == "idx-pair") {
        const std::string images = get("dataset.images");
        const std::string labels = get("dataset.labels");
        if (images.empty() || labels.empty()) {
            throw ConfigError(
                "dataset.images and dataset.labels required for source=idx-pair");
        }
        auto train = load_idx(images, labels);
        const auto limit = static_cast<std::size_t>(integer("dataset.limit"));
        if (limit > 0 && limit < train.num_samples) {
            train.num_samples = limit;
            train.features.resize(limit * train.dim);
            train.labels.resize(limit);
        }
        const std::string test_images = get("dataset.test_images");
        const std::string test_labels = get("dataset.test_labels");
        if (!test_images.empty() && !test_labels.empty()) {
            out.train = std::move(train);
            out.test = load_idx(test_images, test_labels);
        } else {
            auto split = split_dataset(train, test_fraction, seed());
            out.train = std::move(split.train);
            out.test = std::move(split.test);
        }
    } else {
        throw ConfigError("dataset.source: expected synthetic-blobs|csv|idx-pair");
    }
    out.train.validate();
    out.test.validate();
    return out;
}

std::filesystem::path RunConfig::out_dir() const { return get("out.dir"); }

int RunConfig::jobs() const {
    const long j = integer("jobs");
    if (j < 1) throw ConfigError("jobs: must be >= 1");
    return static_cast<int>(j);
}

} // namespace unlearn
