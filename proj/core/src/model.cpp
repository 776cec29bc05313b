#include "unlearn/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

std::vector<std::size_t> Architecture::layer_widths() const {
    std::vector<std::size_t> w;
    w.reserve(hidden.size() + 2);
    w.push_back(input_dim);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(static_cast<std::size_t>(num_classes));
    return w;
}

std::size_t Architecture::param_count() const {
    const auto w = layer_widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        n += w[l] * w[l + 1] + w[l + 1];
    }
    return n;
}

std::string Architecture::descriptor() const {
    std::ostringstream os;
    os << "mlp " << input_dim;
    for (auto h : hidden) os << ' ' << h;
    os << ' ' << num_classes << ' '
       << (activation == Activation::Relu ? "relu" : "tanh");
    return os.str();
}

Architecture Architecture::parse(const std::string& line) {
    std::istringstream is(line);
    std::string head;
    if (!(is >> head) || head != "mlp") {
        throw ConfigError("architecture: expected 'mlp ...', got '" + line + "'");
    }
    std::vector<std::string> tokens;
    std::string t;
    while (is >> t) tokens.push_back(t);
    if (tokens.size() < 3) {
        throw ConfigError("architecture: need at least input, K, activation");
    }
    Architecture arch;
    const std::string& act = tokens.back();
    if (act == "relu") {
        arch.activation = Activation::Relu;
    } else if (act == "tanh") {
        arch.activation = Activation::Tanh;
    } else {
        throw ConfigError("architecture: unknown activation '" + act + "'");
    }
    std::vector<std::size_t> widths;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        long v;
        try {
            v = std::stol(tokens[i]);
        } catch (const std::exception&) {
            throw ConfigError("architecture: bad width '" + tokens[i] + "'");
        }
        if (v < 1) throw ConfigError("architecture: widths must be positive");
        widths.push_back(static_cast<std::size_t>(v));
    }
    if (widths.size() > 4) {
        throw ConfigError("architecture: at most two hidden layers supported");
    }
    arch.input_dim = widths.front();
    arch.num_classes = static_cast<int>(widths.back());
    arch.hidden.assign(widths.begin() + 1, widths.end() - 1);
    if (arch.num_classes < 2) {
        throw ConfigError("architecture: class count must be >= 2");
    }
    return arch;
}

ModelState init_model(const Architecture& arch, std::uint64_t seed) {
    if (arch.input_dim < 1 || arch.num_classes < 2) {
        throw ConfigError("init_model: invalid architecture");
    }
    ModelState m;
    m.arch = arch;
    m.seed = seed;
    m.params.resize(arch.param_count());
    Rng rng(derive_seed(seed, 0x1417));
    const auto w = arch.layer_widths();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(w[l]));
        for (std::size_t i = 0; i < w[l] * w[l + 1]; ++i) {
            m.params[off++] = rng.uniform(-bound, bound);
        }
        off += w[l + 1]; // biases stay zero
    }
    return m;
}

namespace {

struct ForwardPass {
    // activations[0] is the input; activations.back() holds the logits.
    std::vector<std::vector<double>> pre;  // z per non-input layer
    std::vector<std::vector<double>> act;  // a per layer (input included)
    std::vector<double> proba;
};

double activate(double z, Activation a) {
    return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_grad(double z, double a_val, Activation a) {
    return a == Activation::Relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - a_val * a_val;
}

void check_input(const ModelState& model, std::span<const double> x) {
    if (x.size() != model.arch.input_dim) {
        throw std::invalid_argument("model: input width " +
                                    std::to_string(x.size()) + " != " +
                                    std::to_string(model.arch.input_dim));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw NumericError("model: non-finite input feature");
        }
    }
}

ForwardPass forward(const ModelState& model, std::span<const double> x) {
    const auto widths = model.arch.layer_widths();
    ForwardPass fp;
    fp.act.emplace_back(x.begin(), x.end());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t n_in = widths[l];
        const std::size_t n_out = widths[l + 1];
        const double* W = model.params.data() + off;
        const double* b = model.params.data() + off + n_in * n_out;
        off += n_in * n_out + n_out;
        const auto& a_in = fp.act.back();
        std::vector<double> z(n_out);
        for (std::size_t o = 0; o < n_out; ++o) {
            double s = b[o];
            const double* row = W + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) s += row[i] * a_in[i];
            z[o] = s;
        }
        const bool last = (l + 2 == widths.size());
        std::vector<double> a(n_out);
        if (last) {
            a = z;
        } else {
            for (std::size_t o = 0; o < n_out; ++o) {
                a[o] = activate(z[o], model.arch.activation);
            }
        }
        fp.pre.push_back(std::move(z));
        fp.act.push_back(std::move(a));
    }
    // stabilized softmax
    const auto& logits = fp.act.back();
    const double mx = *std::max_element(logits.begin(), logits.end());
    fp.proba.resize(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        fp.proba[k] = std::exp(logits[k] - mx);
        sum += fp.proba[k];
    }
    for (double& p : fp.proba) p /= sum;
    return fp;
}

// Backpropagates d(loss)/d(logits) into the gradient accumulators.
// Returns d(loss)/d(input) when input_grad is non-null.
void backward(const ModelState& model, const ForwardPass& fp,
              std::vector<double> dlogits, std::vector<double>& param_grads,
              double* input_grad) {
    const auto widths = model.arch.layer_widths();
    const std::size_t n_layers = widths.size() - 1;

    // parameter offsets per layer
    std::vector<std::size_t> offs(n_layers);
    std::size_t off = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        offs[l] = off;
        off += widths[l] * widths[l + 1] + widths[l + 1];
    }

    std::vector<double> dz = std::move(dlogits);
    for (std::size_t l = n_layers; l-- > 0;) {
        const std::size_t n_in = widths[l];
        const std::size_t n_out = widths[l + 1];
        const double* W = model.params.data() + offs[l];
        double* gW = param_grads.data() + offs[l];
        double* gb = gW + n_in * n_out;
        const auto& a_in = fp.act[l];
        for (std::size_t o = 0; o < n_out; ++o) {
            double* grow = gW + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) grow[i] += dz[o] * a_in[i];
            gb[o] += dz[o];
        }
        const bool need_below = (l > 0) || (input_grad != nullptr);
        if (!need_below) break;
        std::vector<double> da(n_in, 0.0);
        for (std::size_t o = 0; o < n_out; ++o) {
            const double* row = W + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) da[i] += row[i] * dz[o];
        }
        if (l == 0) {
            for (std::size_t i = 0; i < n_in; ++i) input_grad[i] += da[i];
            break;
        }
        const auto& z_below = fp.pre[l - 1];
        const auto& a_below = fp.act[l];
        dz.assign(n_in, 0.0);
        for (std::size_t i = 0; i < n_in; ++i) {
            dz[i] = da[i] *
                    activate_grad(z_below[i], a_below[i], model.arch.activation);
        }
    }
}

} // namespace

ProbabilityVector predict_proba(const ModelState& model,
                                std::span<const double> x) {
    check_input(model, x);
    return forward(model, x).proba;
}

int predict_label(const ModelState& model, std::span<const double> x) {
    const auto p = predict_proba(model, x);
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (p[k] > p[best]) best = k;
    }
    return static_cast<int>(best) + 1;
}

BackwardResult loss_and_grads(const ModelState& model, const Batch& batch,
                              const LossSpec& spec, bool want_input_grads) {
    const std::size_t dim = model.arch.input_dim;
    const int K = model.arch.num_classes;
    if (batch.labels.empty()) {
        throw std::invalid_argument("loss_and_grads: empty batch");
    }
    const std::size_t n = batch.labels.size();
    if (batch.inputs.size() != n * dim) {
        throw std::invalid_argument("loss_and_grads: input buffer size mismatch");
    }
    std::span<const double> clean =
        batch.clean_inputs.empty() ? batch.inputs : batch.clean_inputs;
    if (spec.asr_weight != 0.0 && clean.size() != n * dim) {
        throw std::invalid_argument("loss_and_grads: clean input size mismatch");
    }

    BackwardResult out;
    out.param_grads.assign(model.params.size(), 0.0);
    if (want_input_grads) out.input_grads.assign(n * dim, 0.0);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = batch.labels[i];
        if (y < 1 || y > K) {
            throw std::invalid_argument("loss_and_grads: label out of range");
        }
        std::span<const double> x{batch.inputs.data() + i * dim, dim};
        check_input(model, x);
        const auto fp = forward(model, x);
        const double p_y = fp.proba[static_cast<std::size_t>(y - 1)];
        out.loss.cross_entropy += -std::log(p_y) * inv_n;
        std::vector<double> dlogits(fp.proba);
        dlogits[static_cast<std::size_t>(y - 1)] -= 1.0;
        for (double& d : dlogits) d *= inv_n;
        backward(model, fp, std::move(dlogits), out.param_grads,
                 want_input_grads ? out.input_grads.data() + i * dim : nullptr);
    }

    if (spec.asr_weight != 0.0) {
        const double invK = 1.0 / static_cast<double>(K);
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> x{clean.data() + i * dim, dim};
            check_input(model, x);
            const auto fp = forward(model, x);
            double term = 0.0;
            std::vector<double> gp(fp.proba.size());
            for (std::size_t k = 0; k < fp.proba.size(); ++k) {
                const double d = fp.proba[k] - invK;
                term += d * d * invK;
                gp[k] = 2.0 * invK * d * spec.asr_weight * inv_n;
            }
            out.loss.asr_term += term * spec.asr_weight * inv_n;
            // through the softmax Jacobian
            double dot = 0.0;
            for (std::size_t k = 0; k < gp.size(); ++k) dot += gp[k] * fp.proba[k];
            std::vector<double> dlogits(gp.size());
            for (std::size_t k = 0; k < gp.size(); ++k) {
                dlogits[k] = fp.proba[k] * (gp[k] - dot);
            }
            backward(model, fp, std::move(dlogits), out.param_grads, nullptr);
        }
    }

    out.loss.total = out.loss.cross_entropy + out.loss.asr_term;
    if (!std::isfinite(out.loss.total)) {
        throw NumericError("loss_and_grads: non-finite loss");
    }
    return out;
}

ModelState sgd_update(const ModelState& model, std::span<const double> grads,
                      double eta) {
    if (grads.size() != model.params.size()) {
        throw std::invalid_argument("sgd_update: gradient size mismatch");
    }
    if (!(eta > 0.0)) {
        throw std::invalid_argument("sgd_update: learning rate must be > 0");
    }
    ModelState next = model;
    for (std::size_t i = 0; i < next.params.size(); ++i) {
        next.params[i] -= eta * grads[i];
    }
    return next;
}

double grad_check(const ModelState& model, const Batch& batch,
                  const LossSpec& spec, double eps) {
    if (!(eps > 0.0) || eps > 1e-2) {
        throw std::invalid_argument("grad_check: eps must be in (0, 1e-2]");
    }
    const auto analytic = loss_and_grads(model, batch, spec, false);
    ModelState probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.params.size(); ++i) {
        const double saved = probe.params[i];
        probe.params[i] = saved + eps;
        const double up = loss_and_grads(probe, batch, spec, false).loss.total;
        probe.params[i] = saved - eps;
        const double dn = loss_and_grads(probe, batch, spec, false).loss.total;
        probe.params[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(dn)) {
            throw NumericError("grad_check: non-finite loss while probing");
        }
        const double cd = (up - dn) / (2.0 * eps);
        const double err = std::abs(analytic.param_grads[i] - cd) /
                           std::max(1.0, std::abs(cd));
        worst = std::max(worst, err);
    }
    return worst;
}

} // namespace unlearn
