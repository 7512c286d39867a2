#ifndef PROFBO_DATASET_HPP
#define PROFBO_DATASET_HPP

#include <Eigen/Dense>
#include <cmath>

#include "profbo/errors.hpp"

namespace profbo {

/// Observed design in the unit cube with raw responses and the affine
/// standardization record. Responses are standardized (zero mean, unit
/// sample variance) before any surrogate sees them; predictions are mapped
/// back through the stored constants.
struct Dataset {
    Eigen::MatrixXd X;   // n x d, all entries in [0,1]
    Eigen::VectorXd y;   // raw responses
    double y_mean = 0.0;
    double y_sd = 1.0;
    int control_index = 0;

    int n() const { return static_cast<int>(X.rows()); }
    int dim() const { return static_cast<int>(X.cols()); }

    /// Recompute standardization constants from the current responses.
    /// Constant (or singleton) responses get y_sd = 1 so standardization
    /// stays well defined.
    void restandardize() {
        const int m = n();
        if (m == 0) { y_mean = 0.0; y_sd = 1.0; return; }
        y_mean = y.mean();
        if (m < 2) { y_sd = 1.0; return; }
        const double ss = (y.array() - y_mean).square().sum();
        const double var = ss / (m - 1);
        y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    Eigen::VectorXd y_standardized() const {
        return (y.array() - y_mean) / y_sd;
    }

    double destandardize(double v) const { return v * y_sd + y_mean; }
    Eigen::VectorXd destandardize(const Eigen::VectorXd& v) const {
        return (v.array() * y_sd + y_mean).matrix();
    }

    void append(const Eigen::VectorXd& x_unit, double response) {
        if (x_unit.size() != dim() && n() > 0)
            throw invalid_argument("Dataset::append: dimension mismatch");
        X.conservativeResize(n() + 1, x_unit.size());
        X.row(n() - 1) = x_unit.transpose();
        y.conservativeResize(y.size() + 1);
        y[y.size() - 1] = response;
        restandardize();
    }

    void validate_unit_cube() const {
        for (int i = 0; i < X.rows(); ++i)
            for (int j = 0; j < X.cols(); ++j)
                if (X(i, j) < 0.0 || X(i, j) > 1.0)
                    throw invalid_argument("Dataset: input outside the unit cube");
    }

    /// Nuisance-space projection: drop the control column.
    Eigen::MatrixXd nuisance_projection() const {
        const int d = dim();
        if (control_index < 0 || control_index >= d)
            throw invalid_argument("Dataset: control_index out of range");
        Eigen::MatrixXd P(n(), d - 1);
        int c = 0;
        for (int j = 0; j < d; ++j) {
            if (j == control_index) continue;
            P.col(c++) = X.col(j);
        }
        return P;
    }
};

/// Build a Dataset by evaluating `f` (a functor on unit-cube points) at the
/// rows of a design matrix.
template <typename F>
Dataset make_dataset(const Eigen::MatrixXd& X_unit, F&& f, int control_index = 0) {
    Dataset d;
    d.X = X_unit;
    d.control_index = control_index;
    d.y.resize(X_unit.rows());
    for (int i = 0; i < X_unit.rows(); ++i)
        d.y[i] = f(Eigen::VectorXd(X_unit.row(i).transpose()));
    d.restandardize();
    return d;
}

} // namespace profbo

#endif
