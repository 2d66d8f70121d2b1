#include <doctest.h>

#include <cmath>
#include <vector>

#include "histosr/adam.hpp"
#include "histosr/nn_ops.hpp"
#include "histosr/rng.hpp"

using namespace histosr;

TEST_CASE("rng streams replay exactly for the same seed") {
    Rng a(1234), b(1234);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c(1234), d(1234);
    for (int i = 0; i < 100; ++i) {
        CHECK(c.uniform() == d.uniform());
        CHECK(c.normal(0.0, 1.0) == d.normal(0.0, 1.0));
        CHECK(c.uniform_below(17) == d.uniform_below(17));
    }
}

TEST_CASE("rng uniform stays in [0,1) and uniform_below in range") {
    Rng rng(99);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 10000; ++i) {
        CHECK(rng.uniform_below(7) < 7);
    }
    CHECK(rng.uniform_below(1) == 0);
    CHECK_THROWS_AS(rng.uniform_below(0), ConfigError);
}

TEST_CASE("rng child streams differ from each other") {
    Rng a = Rng::for_stream(42, 0);
    Rng b = Rng::for_stream(42, 1);
    int same = 0;
    for (int i = 0; i < 64; ++i) {
        if (a.next_u64() == b.next_u64()) ++same;
    }
    CHECK(same == 0);
}

TEST_CASE("he_normal_init statistics at fan_in 144") {
    // 3x3 kernel, 16 input channels -> fan_in 144, stddev sqrt(2/144).
    const double expected_std = std::sqrt(2.0 / 144.0);
    CHECK(expected_std == doctest::Approx(0.11785).epsilon(1e-4));

    Rng rng(2024);
    // 3*3*16*70 = 10080 draws >= 10000.
    auto k = he_normal_init<double>(3, 3, 16, 70, rng);
    const double n = static_cast<double>(k.weights.size());
    double mean = 0.0;
    for (double v : k.weights) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : k.weights) var += (v - mean) * (v - mean);
    var /= n;
    const double sample_std = std::sqrt(var);

    CHECK(std::abs(sample_std - expected_std) < 0.05 * expected_std);
    CHECK(std::abs(mean) < 3.0 * expected_std / std::sqrt(n));
    for (double b : k.bias) CHECK(b == 0.0);
}

TEST_CASE("he_normal_init rejects zero fan_in") {
    Rng rng(1);
    CHECK_THROWS_AS(he_normal_init<float>(3, 3, 0, 4, rng), ConfigError);
}

TEST_CASE("he_normal_init is deterministic per seed") {
    Rng a(7), b(7);
    auto ka = he_normal_init<float>(3, 3, 4, 4, a);
    auto kb = he_normal_init<float>(3, 3, 4, 4, b);
    CHECK(ka.weights == kb.weights);
}

TEST_CASE("adam step with zero gradient and zero state leaves params unchanged") {
    std::vector<float> params = {1.0f, -2.0f, 0.5f};
    std::vector<float> grads = {0.0f, 0.0f, 0.0f};
    AdamSlotT<float> slot(3);
    adam_step<float>(params, grads, slot, 1, AdamConfig{});
    CHECK(params == std::vector<float>{1.0f, -2.0f, 0.5f});
}

TEST_CASE("adam first step moves each element by about lr") {
    AdamConfig cfg;
    cfg.learning_rate = 0.001;
    std::vector<float> params = {1.0f, 2.0f};
    std::vector<float> grads = {0.3f, -4.0f};
    AdamSlotT<float> slot(2);
    adam_step<float>(params, grads, slot, 1, cfg);
    // First bias-corrected step: lr * g / (|g| + eps), i.e. ~lr * sign(g).
    CHECK(std::abs(params[0] - (1.0f - 0.001f)) < 1e-6);
    CHECK(std::abs(params[1] - (2.0f + 0.001f)) < 1e-6);
}

TEST_CASE("adam two-step scalar quadratic matches the hand recurrence bit for bit") {
    // Objective 0.5*theta^2, gradient = theta; replay the update by hand.
    AdamConfig cfg;
    cfg.learning_rate = 0.05;
    std::vector<float> theta = {0.8f};
    AdamSlotT<float> slot(1);

    float m = 0.0f, v = 0.0f, ref = 0.8f;
    for (int t = 1; t <= 2; ++t) {
        const float g = ref;
        std::vector<float> grads = {theta[0]};
        adam_step<float>(std::span<float>(theta), grads, slot, t, cfg);

        const float b1 = static_cast<float>(cfg.beta1);
        const float b2 = static_cast<float>(cfg.beta2);
        m = b1 * m + (1.0f - b1) * g;
        v = b2 * v + (1.0f - b2) * g * g;
        const float c1 = static_cast<float>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
        const float c2 = static_cast<float>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
        const float mhat = m / c1;
        const float vhat = v / c2;
        ref -= static_cast<float>(cfg.learning_rate) * mhat /
               (std::sqrt(vhat) + static_cast<float>(cfg.epsilon));

        CHECK(theta[0] == ref);
    }
}

TEST_CASE("adam rejects bad step index and size mismatches") {
    std::vector<float> params = {1.0f};
    std::vector<float> grads = {1.0f};
    AdamSlotT<float> slot(1);
    CHECK_THROWS_AS(adam_step<float>(params, grads, slot, 0, AdamConfig{}), ConfigError);
    AdamSlotT<float> wrong(2);
    CHECK_THROWS_AS(adam_step<float>(params, grads, wrong, 1, AdamConfig{}), ShapeError);
}
