#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgamlss/bspline.hpp"
#include "rgamlss/families.hpp"

namespace rgamlss {

/// Named covariate columns of equal length.
using CovariateTable = std::map<std::string, std::vector<double>>;

enum class SmoothKind { BSpline1D, Tensor2D };

struct SmoothSpec {
    std::vector<std::string> vars;
    /// Basis dimension per margin (one entry for 1D, two for tensor smooths).
    std::vector<int> k;
    int order = 2;
    int degree = 3;
    /// Target distribution parameter (0 = mu, 1 = sigma, 2 = nu).
    int param = 0;

    [[nodiscard]] SmoothKind kind() const {
        return vars.size() == 2 ? SmoothKind::Tensor2D : SmoothKind::BSpline1D;
    }
    void validate() const;
};

/// One smooth term: basis columns, penalty components and the constraint
/// transform from the raw basis to the constrained coordinates.
struct DesignBlock {
    SmoothSpec spec;
    std::vector<BSplineBasis> margins;
    Eigen::MatrixXd X;
    /// One penalty per smoothing parameter, in the same coordinates as X.
    std::vector<Eigen::MatrixXd> penalties;
    /// Raw basis -> current coordinates (identity before centering).
    Eigen::MatrixXd Z;
    bool centered = false;
    /// Column offset of this block inside delta (set by assembly).
    int offset = 0;
    /// Index of this block's first smoothing parameter (set by assembly).
    int lambda_offset = 0;

    [[nodiscard]] int n_cols() const { return static_cast<int>(X.cols()); }
    [[nodiscard]] int n_lambda() const { return static_cast<int>(penalties.size()); }

    /// Raw basis rows at new covariate values, clamped into the envelope.
    /// `outside[i]` is set when row i needed clamping.
    [[nodiscard]] Eigen::MatrixXd raw_basis(const std::vector<std::span<const double>>& cols,
                                            std::vector<bool>& outside) const;
    /// Constrained design rows at new covariate values.
    [[nodiscard]] Eigen::MatrixXd basis_at(const std::vector<std::span<const double>>& cols,
                                           std::vector<bool>& outside) const;
};

DesignBlock build_bspline_block(const SmoothSpec& spec, std::span<const double> x);
DesignBlock build_tensor_block(const SmoothSpec& spec, std::span<const double> x1,
                               std::span<const double> x2);
/// Sum-to-zero constraint via a Householder null-space transform.
DesignBlock apply_centering(DesignBlock block);

/// Stacked design for all distribution parameters: delta = (beta_1, beta_2, beta_3)
/// where each beta_d starts with an intercept followed by that parameter's smooth blocks.
class ModelDesign {
public:
    ModelDesign() = default;

    static ModelDesign assemble(const std::vector<SmoothSpec>& specs, const CovariateTable& data,
                                int n_params);

    [[nodiscard]] int n_obs() const { return n_obs_; }
    [[nodiscard]] int n_params() const { return n_params_; }
    [[nodiscard]] int n_coef() const { return p_; }
    [[nodiscard]] int n_lambda() const { return n_lambda_; }

    [[nodiscard]] const Eigen::MatrixXd& X(int d) const { return X_.at(static_cast<std::size_t>(d)); }
    [[nodiscard]] int param_offset(int d) const { return param_offset_.at(static_cast<std::size_t>(d)); }
    [[nodiscard]] int param_size(int d) const { return static_cast<int>(X(d).cols()); }
    [[nodiscard]] const std::vector<DesignBlock>& blocks() const { return blocks_; }
    /// Global indices of the unpenalized coefficients (intercepts).
    [[nodiscard]] std::vector<int> intercept_indices() const;

    /// S(lambda) = blockdiag(0 for intercepts, sum_j lambda_j D_j).
    [[nodiscard]] Eigen::MatrixXd S(const Eigen::VectorXd& lambda) const;
    /// dS/dlambda_j (independent of lambda).
    [[nodiscard]] Eigen::MatrixXd dS(int j) const;
    [[nodiscard]] Eigen::VectorXd S_times(const Eigen::VectorXd& lambda,
                                          const Eigen::VectorXd& delta) const;
    /// delta^T dS_j delta.
    [[nodiscard]] double quad_form(int j, const Eigen::VectorXd& delta) const;

    /// Block owning smoothing parameter j and the penalty index within it.
    [[nodiscard]] std::pair<int, int> lambda_owner(int j) const;

    /// Linear predictors, n x n_params.
    [[nodiscard]] Eigen::MatrixXd predictors(const Eigen::VectorXd& delta) const;

    /// Per-parameter design rows for new covariate values. Rows outside a
    /// basis envelope are clamped and flagged in `outside`.
    [[nodiscard]] std::vector<Eigen::MatrixXd> design_at(const CovariateTable& data,
                                                         std::vector<bool>& outside) const;

    [[nodiscard]] std::vector<std::string> covariate_names() const;

    /// Builds a design from already-constructed blocks (used when loading a
    /// saved model). Blocks must carry margins, Z and penalties.
    static ModelDesign from_blocks(std::vector<DesignBlock> blocks, const CovariateTable& data,
                                   int n_params);

private:
    void finalize(const CovariateTable* data);

    int n_obs_ = 0;
    int n_params_ = 0;
    int p_ = 0;
    int n_lambda_ = 0;
    std::vector<DesignBlock> blocks_;
    std::vector<Eigen::MatrixXd> X_;
    std::vector<int> param_offset_;
};

}  // namespace rgamlss
