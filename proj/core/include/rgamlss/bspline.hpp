#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace rgamlss {

/// B-spline basis on a clamped knot vector (boundary knots repeated
/// degree + 1 times).
class BSplineBasis {
public:
    BSplineBasis() = default;
    BSplineBasis(std::vector<double> knots, int degree);

    /// Interior knots at quantiles of the unique covariate values.
    static BSplineBasis from_quantiles(std::span<const double> x, int k, int degree = 3);

    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] int dim() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
    [[nodiscard]] double lower() const { return knots_.front(); }
    [[nodiscard]] double upper() const { return knots_.back(); }
    [[nodiscard]] bool in_envelope(double x) const { return x >= lower() && x <= upper(); }

    /// n x dim basis matrix. Throws DomainError for x outside [lower, upper].
    [[nodiscard]] Eigen::MatrixXd evaluate(std::span<const double> x) const;

    /// Basis row at x (which must lie inside the envelope).
    void evaluate_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const;

private:
    std::vector<double> knots_;
    int degree_ = 3;
};

Eigen::MatrixXd build_bspline_basis(std::span<const double> x, int k, int degree = 3);

/// m-th order difference operator, (k - m) x k.
Eigen::MatrixXd difference_operator(int k, int m);

/// Delta_m^T Delta_m, k x k with rank k - m.
Eigen::MatrixXd difference_penalty(int k, int m);

/// Row-wise Kronecker product: row i is kron(A.row(i), B.row(i)).
Eigen::MatrixXd row_kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace rgamlss
