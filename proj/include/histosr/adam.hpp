#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "histosr/errors.hpp"

namespace histosr {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

// First/second moment accumulators for one parameter tensor.
template <typename T>
struct AdamSlotT {
    std::vector<T> m, v;
    explicit AdamSlotT(std::size_t size = 0) : m(size, T(0)), v(size, T(0)) {}
};

using AdamSlot = AdamSlotT<float>;

// One Adam update:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamSlotT<T>& slot, std::int64_t t,
               const AdamConfig& cfg) {
    if (t < 1) throw ConfigError("adam_step: step index must be >= 1");
    if (params.size() != grads.size() || params.size() != slot.m.size() ||
        params.size() != slot.v.size()) {
        throw ShapeError("adam_step: size mismatch (params " + std::to_string(params.size()) +
                         ", grads " + std::to_string(grads.size()) + ", moments " +
                         std::to_string(slot.m.size()) + "/" + std::to_string(slot.v.size()) + ")");
    }
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T lr = static_cast<T>(cfg.learning_rate);
    const T eps = static_cast<T>(cfg.epsilon);
    const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t)));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        slot.m[i] = b1 * slot.m[i] + (T(1) - b1) * g;
        slot.v[i] = b2 * slot.v[i] + (T(1) - b2) * g * g;
        const T mhat = slot.m[i] / c1;
        const T vhat = slot.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace histosr
