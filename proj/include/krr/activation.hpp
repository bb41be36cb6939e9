#pragma once
#include <cmath>
#include <functional>
#include <string>

#include "krr/errors.hpp"
#include "krr/quadrature.hpp"

namespace krr {

struct Activation {
    std::string name;
    double (*fn)(double);
    double lipschitz;
};

namespace detail {
inline double act_identity(double t) { return t; }
inline double act_tanh(double t) { return std::tanh(t); }
inline double act_relu(double t) { return t > 0.0 ? t : 0.0; }
inline double act_sigmoid_centered(double t) { return 1.0 / (1.0 + std::exp(-t)) - 0.5; }
} // namespace detail

inline Activation activation_by_name(const std::string& name) {
    if (name == "identity") return {name, detail::act_identity, 1.0};
    if (name == "tanh") return {name, detail::act_tanh, 1.0};
    if (name == "relu") return {name, detail::act_relu, 1.0};
    if (name == "sigmoid_centered") return {name, detail::act_sigmoid_centered, 0.25};
    throw ValidationError("unknown activation '" + name + "'");
}

// ||sigma(c .)||^2_{L2(gamma)} = E[sigma(c Z)^2], Z ~ N(0,1).
inline double activation_l2sq(const Activation& act, double c) {
    auto f = act.fn;
    return gaussian_expectation([f, c](double z) {
        double v = f(c * z);
        return v * v;
    });
}

} // namespace krr
