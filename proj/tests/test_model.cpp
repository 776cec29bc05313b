#include <doctest.h>

#include <cmath>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/model.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;

namespace {

ModelState zero_model(const std::string& desc) {
    ModelState m = init_model(Architecture::parse(desc), 0);
    for (double& p : m.params) p = 0.0;
    return m;
}

// Independent forward pass used as the oracle: reads the parameter layout
// directly and recomputes logits and softmax with its own loops.
std::vector<double> oracle_forward(const ModelState& m,
                                   const std::vector<double>& x) {
    const auto widths = m.arch.layer_widths();
    std::vector<double> a = x;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        std::vector<double> z(widths[l + 1]);
        for (std::size_t o = 0; o < widths[l + 1]; ++o) {
            double s = m.params[off + widths[l] * widths[l + 1] + o];
            for (std::size_t i = 0; i < widths[l]; ++i) {
                s += m.params[off + o * widths[l] + i] * a[i];
            }
            z[o] = s;
        }
        off += widths[l] * widths[l + 1] + widths[l + 1];
        if (l + 2 == widths.size()) {
            a = z;
        } else {
            a.resize(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) {
                a[i] = m.arch.activation == Activation::Relu
                           ? std::max(0.0, z[i])
                           : std::tanh(z[i]);
            }
        }
    }
    double mx = a[0];
    for (double v : a) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        p[i] = std::exp(a[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

} // namespace

TEST_CASE("architecture descriptor round-trip") {
    const auto arch = Architecture::parse("mlp 784 256 10 relu");
    CHECK(arch.input_dim == 784);
    CHECK(arch.hidden == std::vector<std::size_t>{256});
    CHECK(arch.num_classes == 10);
    CHECK(arch.descriptor() == "mlp 784 256 10 relu");
    CHECK(Architecture::parse(arch.descriptor()) == arch);

    CHECK_THROWS_AS(Architecture::parse("cnn 3 2 relu"), ConfigError);
    CHECK_THROWS_AS(Architecture::parse("mlp 3 relu"), ConfigError);
    CHECK_THROWS_AS(Architecture::parse("mlp 3 2 swish"), ConfigError);
    CHECK_THROWS_AS(Architecture::parse("mlp 3 1 relu"), ConfigError);
}

TEST_CASE("zero-weight model predicts uniformly") {
    const auto m2 = zero_model("mlp 4 2 relu");
    const std::vector<double> x{0.1, 0.9, 0.4, 0.2};
    const auto p2 = predict_proba(m2, x);
    CHECK(p2[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p2[1] == doctest::Approx(0.5).epsilon(1e-15));

    const auto m10 = zero_model("mlp 4 8 10 tanh");
    for (double p : predict_proba(m10, x)) {
        CHECK(p == doctest::Approx(0.1).epsilon(1e-15));
    }
}

TEST_CASE("forward pass matches the independent oracle") {
    for (const char* desc : {"mlp 5 7 3 relu", "mlp 5 6 4 3 tanh"}) {
        const auto m = init_model(Architecture::parse(desc), 42);
        Rng rng(7);
        std::vector<double> x(5);
        for (double& v : x) v = rng.next_double();
        const auto got = predict_proba(m, x);
        const auto want = oracle_forward(m, x);
        REQUIRE(got.size() == want.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
            CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("probability normalization across random models") {
    for (int s = 0; s < 10; ++s) {
        const auto m = init_model(Architecture::parse("mlp 6 9 5 relu"), s);
        Rng rng(100 + s);
        std::vector<double> x(6);
        for (double& v : x) v = rng.next_double();
        const auto p = predict_proba(m, x);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("input contract errors") {
    const auto m = zero_model("mlp 4 2 relu");
    const std::vector<double> wrong{0.1, 0.2};
    CHECK_THROWS_AS(predict_proba(m, wrong), std::invalid_argument);
    const std::vector<double> nan_input{0.1, 0.2, std::nan(""), 0.4};
    CHECK_THROWS_AS(predict_proba(m, nan_input), NumericError);
    CHECK_THROWS_AS(
        loss_and_grads(m, Batch{{}, {}}, LossSpec{}),
        std::invalid_argument);
}

TEST_CASE("uniform prediction gives ln K cross-entropy") {
    const auto m = zero_model("mlp 4 6 10 relu");
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    const std::vector<int> y{3};
    const auto bw = loss_and_grads(m, Batch{x, y}, LossSpec{});
    CHECK(bw.loss.cross_entropy == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(bw.loss.total == bw.loss.cross_entropy + bw.loss.asr_term);
}

TEST_CASE("frozen output layer gives zero input gradients") {
    // zero the last layer: logits are constant, so the loss surface is flat
    auto m = init_model(Architecture::parse("mlp 4 6 3 tanh"), 5);
    const auto widths = m.arch.layer_widths();
    const std::size_t last = widths[1] * widths[2] + widths[2];
    for (std::size_t i = m.params.size() - last; i < m.params.size(); ++i) {
        m.params[i] = 0.0;
    }
    const std::vector<double> x{0.1, 0.9, 0.5, 0.3};
    const std::vector<int> y{2};
    const auto bw = loss_and_grads(m, Batch{x, y}, LossSpec{}, true);
    for (double g : bw.input_grads) CHECK(g == 0.0);
    CHECK(grad_check(m, Batch{x, y}, LossSpec{}, 1e-4) ==
          doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gradients match central finite differences") {
    Rng rng(99);
    for (int s = 0; s < 10; ++s) {
        const auto m = init_model(Architecture::parse("mlp 5 8 4 tanh"), 1000 + s);
        std::vector<double> xs(3 * 5);
        for (double& v : xs) v = rng.next_double();
        std::vector<int> ys;
        for (int i = 0; i < 3; ++i) ys.push_back(1 + static_cast<int>(rng.below(4)));
        CHECK(grad_check(m, Batch{xs, ys}, LossSpec{0.0}, 1e-4) < 1e-3);
        CHECK(grad_check(m, Batch{xs, ys}, LossSpec{1.0}, 1e-4) < 1e-3);
    }
}

TEST_CASE("input gradients match finite differences") {
    const auto m = init_model(Architecture::parse("mlp 4 6 3 relu"), 17);
    std::vector<double> xs{0.2, 0.8, 0.5, 0.1, 0.6, 0.3, 0.9, 0.4};
    const std::vector<int> ys{1, 3};
    const auto bw = loss_and_grads(m, Batch{xs, ys}, LossSpec{}, true);
    const double eps = 1e-6;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        auto probe = xs;
        probe[j] += eps;
        const double up =
            loss_and_grads(m, Batch{probe, ys}, LossSpec{}).loss.total;
        probe[j] -= 2 * eps;
        const double dn =
            loss_and_grads(m, Batch{probe, ys}, LossSpec{}).loss.total;
        const double cd = (up - dn) / (2 * eps);
        CHECK(bw.input_grads[j] == doctest::Approx(cd).epsilon(1e-4));
    }
}

TEST_CASE("sgd update arithmetic") {
    const auto m = init_model(Architecture::parse("mlp 2 3 relu"), 3);

    std::vector<double> zero(m.params.size(), 0.0);
    CHECK(sgd_update(m, zero, 0.1).params == m.params);

    std::vector<double> g(m.params.size(), 0.5);
    const auto m1 = sgd_update(m, g, 0.1);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        CHECK(m1.params[i] == doctest::Approx(m.params[i] - 0.05).epsilon(1e-15));
    }

    // two updates with fixed grads equal one update with the summed step
    const auto twice = sgd_update(sgd_update(m, g, 0.1), g, 0.1);
    const auto once = sgd_update(m, g, 0.2);
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        CHECK(twice.params[i] == doctest::Approx(once.params[i]).epsilon(1e-15));
    }

    std::vector<double> bad(m.params.size() - 1, 0.0);
    CHECK_THROWS_AS(sgd_update(m, bad, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(sgd_update(m, zero, 0.0), std::invalid_argument);
}

TEST_CASE("seeded initialization and loss are deterministic") {
    const auto arch = Architecture::parse("mlp 6 10 4 relu");
    const auto a = init_model(arch, 12345);
    const auto b = init_model(arch, 12345);
    CHECK(a.params == b.params);
    const auto c = init_model(arch, 54321);
    CHECK(a.params != c.params);

    std::vector<double> xs(6, 0.3);
    const std::vector<int> ys{2};
    const auto l1 = loss_and_grads(a, Batch{xs, ys}, LossSpec{}).loss.total;
    const auto l2 = loss_and_grads(b, Batch{xs, ys}, LossSpec{}).loss.total;
    CHECK(l1 == l2);
}

TEST_CASE("grad_check rejects bad eps") {
    const auto m = zero_model("mlp 2 2 relu");
    const std::vector<double> x{0.1, 0.2};
    const std::vector<int> y{1};
    CHECK_THROWS_AS(grad_check(m, Batch{x, y}, LossSpec{}, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(grad_check(m, Batch{x, y}, LossSpec{}, 0.5),
                    std::invalid_argument);
}
