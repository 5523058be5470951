#include "rgamlss/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgamlss/error.hpp"

namespace rgamlss {

BSplineBasis::BSplineBasis(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw InvalidArgument("spline degree must be non-negative");
    if (static_cast<int>(knots_.size()) < 2 * (degree_ + 1)) {
        throw InvalidArgument("knot vector too short for the spline degree");
    }
    if (!std::is_sorted(knots_.begin(), knots_.end())) {
        throw InvalidArgument("knot vector must be non-decreasing");
    }
    if (!(knots_.back() > knots_.front())) throw InvalidArgument("knot span is empty");
}

BSplineBasis BSplineBasis::from_quantiles(std::span<const double> x, int k, int degree) {
    if (degree < 0) throw InvalidArgument("spline degree must be non-negative");
    if (k < degree + 1) {
        throw InvalidArgument("basis dimension " + std::to_string(k) + " below degree + 1");
    }
    std::vector<double> u(x.begin(), x.end());
    for (double v : u) {
        if (!std::isfinite(v)) throw InvalidArgument("non-finite covariate value");
    }
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    const int n_interior = k - degree - 1;
    if (static_cast<int>(u.size()) < n_interior + 2) {
        throw InvalidArgument("covariate has " + std::to_string(u.size()) +
                              " unique values; " + std::to_string(n_interior + 2) +
                              " needed for k = " + std::to_string(k));
    }
    std::vector<double> knots(static_cast<std::size_t>(degree + 1), u.front());
    const double last = static_cast<double>(u.size() - 1);
    for (int j = 1; j <= n_interior; ++j) {
        const double pos = last * static_cast<double>(j) / static_cast<double>(n_interior + 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        const double q = lo + 1 < u.size() ? u[lo] + frac * (u[lo + 1] - u[lo]) : u[lo];
        knots.push_back(q);
    }
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), u.back());
    return BSplineBasis(std::move(knots), degree);
}

void BSplineBasis::evaluate_row(double x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) const {
    const int p = degree_;
    const int nb = dim();
    row.setZero();
    // Knot span: largest i with t_i <= x < t_{i+1}; the right end maps to the last span.
    int i = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
    i = std::clamp(i, p, nb - 1);
    // Cox-de Boor triangle with the usual left/right differences.
    std::vector<double> n(static_cast<std::size_t>(p + 1), 0.0);
    std::vector<double> left(static_cast<std::size_t>(p + 1), 0.0);
    std::vector<double> right(static_cast<std::size_t>(p + 1), 0.0);
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(i + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(i + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
            const double tmp = denom != 0.0 ? n[static_cast<std::size_t>(r)] / denom : 0.0;
            n[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
            saved = left[static_cast<std::size_t>(j - r)] * tmp;
        }
        n[static_cast<std::size_t>(j)] = saved;
    }
    for (int r = 0; r <= p; ++r) row[i - p + r] = n[static_cast<std::size_t>(r)];
}

Eigen::MatrixXd BSplineBasis::evaluate(std::span<const double> x) const {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(x.size()), dim());
    for (std::size_t r = 0; r < x.size(); ++r) {
        if (!in_envelope(x[r])) {
            throw DomainError("covariate value " + std::to_string(x[r]) +
                              " outside the knot envelope [" + std::to_string(lower()) + ", " +
                              std::to_string(upper()) + "]");
        }
        evaluate_row(x[r], b.row(static_cast<Eigen::Index>(r)));
    }
    return b;
}

Eigen::MatrixXd build_bspline_basis(std::span<const double> x, int k, int degree) {
    return BSplineBasis::from_quantiles(x, k, degree).evaluate(x);
}

Eigen::MatrixXd difference_operator(int k, int m) {
    if (m < 0) throw InvalidArgument("difference order must be non-negative");
    if (k <= m) {
        throw InvalidArgument("difference penalty needs k > m (k = " + std::to_string(k) +
                              ", m = " + std::to_string(m) + ")");
    }
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(k, k);
    for (int r = 0; r < m; ++r) {
        const Eigen::Index rows = d.rows() - 1;
        d = (d.bottomRows(rows) - d.topRows(rows)).eval();
    }
    return d;
}

Eigen::MatrixXd difference_penalty(int k, int m) {
    const Eigen::MatrixXd d = difference_operator(k, m);
    return d.transpose() * d;
}

Eigen::MatrixXd row_kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows()) throw InvalidArgument("row_kronecker: row counts differ");
    Eigen::MatrixXd out(a.rows(), a.cols() * b.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        out.middleCols(j * b.cols(), b.cols()) = b.array().colwise() * a.col(j).array();
    }
    return out;
}

}  // namespace rgamlss
