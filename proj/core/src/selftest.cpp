#include "unlearn/selftest.hpp"

#include <cmath>
#include <cstdio>

#include "unlearn/model.hpp"
#include "unlearn/randomness.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace {

std::vector<double> random_simplex_point(Rng& rng, int K) {
    // exponential spacings normalized to the simplex
    std::vector<double> p(static_cast<std::size_t>(K));
    double sum = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - rng.next_double());
        sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

} // namespace

std::vector<SelfTestResult> run_selftest(std::uint64_t seed) {
    std::vector<SelfTestResult> results;

    {
        SelfTestResult r{"lemma1-identity", true, ""};
        double worst = 0.0;
        for (int K : {2, 10, 100}) {
            Rng rng(derive_seed(seed, 0x1e44a + K));
            for (int i = 0; i < 10000; ++i) {
                const auto p = random_simplex_point(rng, K);
                worst = std::max(worst, lemma1_residual(p));
            }
        }
        r.passed = worst < 1e-9;
        r.detail = "max residual " + fmt(worst);
        results.push_back(r);
    }

    {
        SelfTestResult r{"theorem1-bounds", true, ""};
        double worst_excess = 0.0;
        bool uniform_zero = true;
        for (int K : {2, 10, 100}) {
            Rng rng(derive_seed(seed, 0x7e0 + K));
            const double tight = (K - 1.0) / (static_cast<double>(K) * K);
            for (int i = 0; i < 10000; ++i) {
                const auto p = random_simplex_point(rng, K);
                const double m = mse_to_uniform(p);
                if (m < 0.0 || m > 4.0 / K) r.passed = false;
                worst_excess = std::max(worst_excess, m - tight);
            }
            const std::vector<double> uniform(K, 1.0 / K);
            if (mse_to_uniform(uniform) >= 1e-12) uniform_zero = false;
            const double floor = ce_to_uniform(uniform);
            if (floor < std::log(static_cast<double>(K)) - 1e-12) {
                r.passed = false;
            }
        }
        if (worst_excess > 0.0 || !uniform_zero) r.passed = false;
        r.detail = "max excess over (K-1)/K^2 " + fmt(worst_excess);
        results.push_back(r);
    }

    {
        SelfTestResult r{"gradient-check", true, ""};
        double worst = 0.0;
        const Architecture arch = Architecture::parse("mlp 6 8 4 tanh");
        for (int s = 0; s < 10; ++s) {
            const auto model = init_model(arch, derive_seed(seed, 0x6c + s));
            Rng rng(derive_seed(seed, 0xda7a + s));
            std::vector<double> xs(3 * arch.input_dim);
            for (double& v : xs) v = rng.next_double();
            std::vector<int> ys = {1 + static_cast<int>(rng.below(4)),
                                   1 + static_cast<int>(rng.below(4)),
                                   1 + static_cast<int>(rng.below(4))};
            for (double lambda : {0.0, 1.0}) {
                worst = std::max(
                    worst, grad_check(model, Batch{xs, ys}, LossSpec{lambda},
                                      1e-4));
            }
        }
        r.passed = worst < 1e-3;
        r.detail = "max relative error " + fmt(worst);
        results.push_back(r);
    }

    return results;
}

} // namespace unlearn
