#ifndef PROFBO_BLACKBOX_HPP
#define PROFBO_BLACKBOX_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "profbo/errors.hpp"

namespace profbo {

/// Deterministic benchmark (or plugged-in simulator). `eval_native` works in
/// the function's native domain; callers normally go through eval_unit,
/// which maps the unit cube onto native_bounds affinely.
struct BlackBox {
    std::string name;
    int dim = 0;
    int control_index = 0;
    Eigen::MatrixX2d native_bounds;  // dim x 2, (lo, hi) per coordinate
    std::function<double(const Eigen::VectorXd&)> eval_native;

    Eigen::VectorXd to_native(const Eigen::VectorXd& x_unit) const {
        if (x_unit.size() != dim)
            throw invalid_argument("BlackBox: dimension mismatch in to_native");
        Eigen::VectorXd z(dim);
        for (int j = 0; j < dim; ++j)
            z[j] = native_bounds(j, 0) + x_unit[j] * (native_bounds(j, 1) - native_bounds(j, 0));
        return z;
    }

    Eigen::VectorXd to_unit(const Eigen::VectorXd& x_native) const {
        if (x_native.size() != dim)
            throw invalid_argument("BlackBox: dimension mismatch in to_unit");
        Eigen::VectorXd u(dim);
        for (int j = 0; j < dim; ++j)
            u[j] = (x_native[j] - native_bounds(j, 0)) / (native_bounds(j, 1) - native_bounds(j, 0));
        return u;
    }
};

inline double eval_function(const BlackBox& fn, const Eigen::VectorXd& x_unit) {
    if (x_unit.size() != fn.dim)
        throw invalid_argument("eval_function: point dimension does not match " + fn.name);
    return fn.eval_native(fn.to_native(x_unit));
}

// ---------------------------------------------------------------------------
// Benchmark definitions
// ---------------------------------------------------------------------------

inline BlackBox make_branin(int control_index = 0) {
    BlackBox f;
    f.name = "branin";
    f.dim = 2;
    f.control_index = control_index;
    f.native_bounds.resize(2, 2);
    f.native_bounds << -5.0, 10.0,
                        0.0, 15.0;
    f.eval_native = [](const Eigen::VectorXd& x) {
        constexpr double pi = std::numbers::pi;
        const double a = 1.0;
        const double b = 5.1 / (4.0 * pi * pi);
        const double c = 5.0 / pi;
        const double r = 6.0;
        const double s = 10.0;
        const double t = 1.0 / (8.0 * pi);
        const double u = x[1] - b * x[0] * x[0] + c * x[0] - r;
        return a * u * u + s * (1.0 - t) * std::cos(x[0]) + s;
    };
    return f;
}

inline BlackBox make_kyger3d(int control_index = 0) {
    BlackBox f;
    f.name = "kyger3d";
    f.dim = 3;
    f.control_index = control_index;
    f.native_bounds.resize(3, 2);
    f.native_bounds << 0.0, 1.0,
                       0.0, 1.0,
                       0.0, 1.0;
    f.eval_native = [](const Eigen::VectorXd& x) {
        constexpr double tp = 2.0 * std::numbers::pi;
        return std::exp(-x[0] - std::cos(tp * x[0]))
             + std::sin(tp * x[2])
             + std::exp(-x[2] * std::sin(tp * x[0]))
             + std::cos(tp * x[1])
             - std::exp(-x[1] * std::cos(tp * x[0]));
    };
    return f;
}

inline BlackBox make_kyger2d(int control_index = 0) {
    BlackBox f;
    f.name = "kyger2d";
    f.dim = 2;
    f.control_index = control_index;
    f.native_bounds.resize(2, 2);
    f.native_bounds << 0.0, 2.0 * std::numbers::pi,
                       0.0, 2.5 * std::numbers::pi;
    f.eval_native = [](const Eigen::VectorXd& x) {
        const double bowl = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5);
        const double lead = (std::sin(x[0] * x[0]) + 1.0 + bowl)
                          * (std::cos(x[1]) + 1.5)
                          * std::exp(4.0 - x[0] / 3.0);
        return lead - (x[0] - 0.1) * (x[0] * x[0] + x[1] * x[1]);
    };
    return f;
}

inline BlackBox make_squiggle(int control_index = 0) {
    BlackBox f;
    f.name = "squiggle";
    f.dim = 4;
    f.control_index = control_index;
    f.native_bounds.resize(4, 2);
    f.native_bounds << 0.1, 1.0,
                       0.1, 1.0,
                       0.1, 1.0,
                       0.1, 1.0;
    f.eval_native = [](const Eigen::VectorXd& x) {
        constexpr double sigma = 0.2;
        constexpr double tp = 2.0 * std::numbers::pi;
        const double ssq = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        const double ridge = std::sin(tp * x[0] * x[0]) / 4.0 - x[0] / 10.0 + 0.5;
        const double z = (ssq - ridge) / sigma;
        const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        return x[0] * pdf;
    };
    return f;
}

/// Benchmark registry, addressable by name.
inline BlackBox lookup_blackbox(const std::string& name, int control_index = 0) {
    if (name == "branin") return make_branin(control_index);
    if (name == "kyger3d") return make_kyger3d(control_index);
    if (name == "kyger2d") return make_kyger2d(control_index);
    if (name == "squiggle") return make_squiggle(control_index);
    throw config_error("unknown benchmark function: " + name);
}

inline std::vector<std::string> blackbox_names() {
    return {"branin", "kyger3d", "kyger2d", "squiggle"};
}

} // namespace profbo

#endif
