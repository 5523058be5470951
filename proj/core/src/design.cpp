#include "rgamlss/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <unsupported/Eigen/KroneckerProduct>

#include "rgamlss/error.hpp"

namespace rgamlss {

void SmoothSpec::validate() const {
    if (vars.empty() || vars.size() > 2) {
        throw InvalidArgument("a smooth takes one or two covariates");
    }
    if (k.size() != vars.size()) {
        throw InvalidArgument("smooth over " + vars.front() + ": need one basis dimension per covariate");
    }
    if (param < 0 || param > 2) throw InvalidArgument("smooth target parameter must be 0, 1 or 2");
    for (int kk : k) {
        if (kk < order + 2) {
            throw InvalidArgument("basis dimension " + std::to_string(kk) +
                                  " must be at least penalty order + 2");
        }
        if (kk < degree + 1) {
            throw InvalidArgument("basis dimension " + std::to_string(kk) + " below degree + 1");
        }
        if (vars.size() == 2 && kk < 4) {
            throw InvalidArgument("tensor margins need dimension >= 4");
        }
    }
}

Eigen::MatrixXd DesignBlock::raw_basis(const std::vector<std::span<const double>>& cols,
                                       std::vector<bool>& outside) const {
    if (cols.size() != margins.size()) throw InvalidArgument("covariate count mismatch for smooth");
    const std::size_t n = cols.front().size();
    outside.assign(n, false);
    std::vector<Eigen::MatrixXd> mb;
    for (std::size_t m = 0; m < margins.size(); ++m) {
        const auto& basis = margins[m];
        Eigen::MatrixXd b(static_cast<Eigen::Index>(n), basis.dim());
        for (std::size_t i = 0; i < n; ++i) {
            double x = cols[m][i];
            if (!std::isfinite(x)) throw InvalidArgument("non-finite covariate value");
            if (!basis.in_envelope(x)) {
                outside[i] = true;
                x = std::clamp(x, basis.lower(), basis.upper());
            }
            basis.evaluate_row(x, b.row(static_cast<Eigen::Index>(i)));
        }
        mb.push_back(std::move(b));
    }
    return mb.size() == 1 ? mb[0] : row_kronecker(mb[0], mb[1]);
}

Eigen::MatrixXd DesignBlock::basis_at(const std::vector<std::span<const double>>& cols,
                                      std::vector<bool>& outside) const {
    return raw_basis(cols, outside) * Z;
}

DesignBlock build_bspline_block(const SmoothSpec& spec, std::span<const double> x) {
    spec.validate();
    if (spec.kind() != SmoothKind::BSpline1D) throw InvalidArgument("expected a 1D smooth spec");
    DesignBlock b;
    b.spec = spec;
    b.margins.push_back(BSplineBasis::from_quantiles(x, spec.k[0], spec.degree));
    b.X = b.margins[0].evaluate(x);
    b.penalties.push_back(difference_penalty(spec.k[0], spec.order));
    b.Z = Eigen::MatrixXd::Identity(spec.k[0], spec.k[0]);
    return b;
}

DesignBlock build_tensor_block(const SmoothSpec& spec, std::span<const double> x1,
                               std::span<const double> x2) {
    spec.validate();
    if (spec.kind() != SmoothKind::Tensor2D) throw InvalidArgument("expected a 2D smooth spec");
    if (x1.size() != x2.size()) throw InvalidArgument("tensor covariates differ in length");
    DesignBlock b;
    b.spec = spec;
    b.margins.push_back(BSplineBasis::from_quantiles(x1, spec.k[0], spec.degree));
    b.margins.push_back(BSplineBasis::from_quantiles(x2, spec.k[1], spec.degree));
    b.X = row_kronecker(b.margins[0].evaluate(x1), b.margins[1].evaluate(x2));
    const int k1 = spec.k[0];
    const int k2 = spec.k[1];
    const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(k1, k1);
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(k2, k2);
    b.penalties.push_back(Eigen::kroneckerProduct(difference_penalty(k1, spec.order), i2).eval());
    b.penalties.push_back(Eigen::kroneckerProduct(i1, difference_penalty(k2, spec.order)).eval());
    b.Z = Eigen::MatrixXd::Identity(k1 * k2, k1 * k2);
    return b;
}

DesignBlock apply_centering(DesignBlock block) {
    if (block.centered) throw InvalidArgument("block is already centered");
    const Eigen::Index j = block.X.cols();
    const Eigen::VectorXd c = block.X.colwise().sum().transpose();
    Eigen::VectorXd v = c;
    const double norm = c.norm();
    if (norm == 0.0) throw InvalidArgument("smooth columns sum to zero; nothing to center");
    v[0] += (c[0] >= 0.0 ? norm : -norm);
    const Eigen::MatrixXd h =
        Eigen::MatrixXd::Identity(j, j) - 2.0 * v * v.transpose() / v.squaredNorm();
    const Eigen::MatrixXd z = h.rightCols(j - 1);
    block.X = (block.X * z).eval();
    for (auto& d : block.penalties) {
        d = (z.transpose() * d * z).eval();
        d = (0.5 * (d + d.transpose())).eval();
    }
    block.Z = (block.Z * z).eval();
    block.centered = true;
    return block;
}

namespace {

std::span<const double> column(const CovariateTable& data, const std::string& name) {
    auto it = data.find(name);
    if (it == data.end()) throw InvalidArgument("missing covariate '" + name + "'");
    return it->second;
}

}  // namespace

ModelDesign ModelDesign::assemble(const std::vector<SmoothSpec>& specs, const CovariateTable& data,
                                  int n_params) {
    if (n_params < 1 || n_params > 3) throw InvalidArgument("n_params must be 1, 2 or 3");
    std::vector<DesignBlock> blocks;
    for (const auto& spec : specs) {
        spec.validate();
        if (spec.param >= n_params) {
            throw InvalidArgument("smooth targets parameter " + std::string(kParamNames[static_cast<std::size_t>(spec.param)]) +
                                  " which the family does not have");
        }
        DesignBlock b = spec.kind() == SmoothKind::BSpline1D
                            ? build_bspline_block(spec, column(data, spec.vars[0]))
                            : build_tensor_block(spec, column(data, spec.vars[0]),
                                                 column(data, spec.vars[1]));
        blocks.push_back(apply_centering(std::move(b)));
    }
    ModelDesign md;
    md.n_params_ = n_params;
    md.blocks_ = std::move(blocks);
    md.finalize(&data);
    return md;
}

ModelDesign ModelDesign::from_blocks(std::vector<DesignBlock> blocks, const CovariateTable& data,
                                     int n_params) {
    ModelDesign md;
    md.n_params_ = n_params;
    for (auto& b : blocks) {
        std::vector<std::span<const double>> cols;
        for (const auto& v : b.spec.vars) cols.push_back(column(data, v));
        std::vector<bool> outside;
        b.X = b.basis_at(cols, outside);
    }
    md.blocks_ = std::move(blocks);
    md.finalize(&data);
    return md;
}

void ModelDesign::finalize(const CovariateTable* data) {
    // Row count from the blocks, else from any covariate column.
    n_obs_ = -1;
    for (const auto& b : blocks_) {
        if (n_obs_ < 0) n_obs_ = static_cast<int>(b.X.rows());
        if (b.X.rows() != n_obs_) throw InvalidArgument("smooth blocks differ in row count");
    }
    if (n_obs_ < 0) {
        if (data == nullptr || data->empty()) {
            throw InvalidArgument("cannot infer the number of observations");
        }
        n_obs_ = static_cast<int>(data->begin()->second.size());
    }
    // Order blocks by target parameter, keeping the input order within a parameter.
    std::stable_sort(blocks_.begin(), blocks_.end(),
                     [](const DesignBlock& a, const DesignBlock& b) { return a.spec.param < b.spec.param; });
    X_.clear();
    param_offset_.clear();
    int offset = 0;
    int lam = 0;
    for (int d = 0; d < n_params_; ++d) {
        param_offset_.push_back(offset);
        int cols = 1;
        for (const auto& b : blocks_) {
            if (b.spec.param == d) cols += b.n_cols();
        }
        Eigen::MatrixXd x(n_obs_, cols);
        x.col(0).setOnes();
        int c = 1;
        for (auto& b : blocks_) {
            if (b.spec.param != d) continue;
            x.middleCols(c, b.n_cols()) = b.X;
            b.offset = offset + c;
            b.lambda_offset = lam;
            lam += b.n_lambda();
            c += b.n_cols();
        }
        X_.push_back(std::move(x));
        offset += cols;
    }
    p_ = offset;
    n_lambda_ = lam;
}

std::vector<int> ModelDesign::intercept_indices() const {
    std::vector<int> out;
    for (int d = 0; d < n_params_; ++d) out.push_back(param_offset(d));
    return out;
}

std::pair<int, int> ModelDesign::lambda_owner(int j) const {
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& blk = blocks_[b];
        if (j >= blk.lambda_offset && j < blk.lambda_offset + blk.n_lambda()) {
            return {static_cast<int>(b), j - blk.lambda_offset};
        }
    }
    throw InvalidArgument("smoothing parameter index " + std::to_string(j) + " out of range");
}

Eigen::MatrixXd ModelDesign::S(const Eigen::VectorXd& lambda) const {
    if (lambda.size() != n_lambda_) throw InvalidArgument("lambda has the wrong length");
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p_, p_);
    for (const auto& b : blocks_) {
        auto blk = s.block(b.offset, b.offset, b.n_cols(), b.n_cols());
        for (int k = 0; k < b.n_lambda(); ++k) {
            blk += lambda[b.lambda_offset + k] * b.penalties[static_cast<std::size_t>(k)];
        }
    }
    return s;
}

Eigen::MatrixXd ModelDesign::dS(int j) const {
    const auto [bi, k] = lambda_owner(j);
    const auto& b = blocks_[static_cast<std::size_t>(bi)];
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p_, p_);
    s.block(b.offset, b.offset, b.n_cols(), b.n_cols()) = b.penalties[static_cast<std::size_t>(k)];
    return s;
}

Eigen::VectorXd ModelDesign::S_times(const Eigen::VectorXd& lambda,
                                     const Eigen::VectorXd& delta) const {
    if (lambda.size() != n_lambda_ || delta.size() != p_) {
        throw InvalidArgument("S_times: dimension mismatch");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p_);
    for (const auto& b : blocks_) {
        const auto seg = delta.segment(b.offset, b.n_cols());
        for (int k = 0; k < b.n_lambda(); ++k) {
            out.segment(b.offset, b.n_cols()) +=
                lambda[b.lambda_offset + k] * (b.penalties[static_cast<std::size_t>(k)] * seg);
        }
    }
    return out;
}

double ModelDesign::quad_form(int j, const Eigen::VectorXd& delta) const {
    const auto [bi, k] = lambda_owner(j);
    const auto& b = blocks_[static_cast<std::size_t>(bi)];
    const auto seg = delta.segment(b.offset, b.n_cols());
    return seg.dot(b.penalties[static_cast<std::size_t>(k)] * seg);
}

Eigen::MatrixXd ModelDesign::predictors(const Eigen::VectorXd& delta) const {
    if (delta.size() != p_) throw InvalidArgument("coefficient vector has the wrong length");
    Eigen::MatrixXd eta(n_obs_, n_params_);
    for (int d = 0; d < n_params_; ++d) {
        eta.col(d) = X(d) * delta.segment(param_offset(d), param_size(d));
    }
    return eta;
}

std::vector<Eigen::MatrixXd> ModelDesign::design_at(const CovariateTable& data,
                                                    std::vector<bool>& outside) const {
    Eigen::Index n = -1;
    for (const auto& name : covariate_names()) {
        const auto c = column(data, name);
        if (n >= 0 && static_cast<Eigen::Index>(c.size()) != n) {
            throw InvalidArgument("covariate columns differ in length");
        }
        n = static_cast<Eigen::Index>(c.size());
    }
    if (n < 0) n = data.empty() ? 0 : static_cast<Eigen::Index>(data.begin()->second.size());
    outside.assign(static_cast<std::size_t>(n), false);
    std::vector<Eigen::MatrixXd> out;
    for (int d = 0; d < n_params_; ++d) {
        Eigen::MatrixXd x(n, param_size(d));
        x.col(0).setOnes();
        for (const auto& b : blocks_) {
            if (b.spec.param != d) continue;
            std::vector<std::span<const double>> cols;
            for (const auto& v : b.spec.vars) cols.push_back(column(data, v));
            std::vector<bool> flag;
            x.middleCols(b.offset - param_offset(d), b.n_cols()) = b.basis_at(cols, flag);
            for (std::size_t i = 0; i < flag.size(); ++i) {
                if (flag[i]) outside[i] = true;
            }
        }
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<std::string> ModelDesign::covariate_names() const {
    std::set<std::string> names;
    for (const auto& b : blocks_) names.insert(b.spec.vars.begin(), b.spec.vars.end());
    return {names.begin(), names.end()};
}

}  // namespace rgamlss
