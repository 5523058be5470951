#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgamlss/design.hpp"
#include "rgamlss/smoothing_selection.hpp"

namespace rgamlss {

/// Poisson GAM design on x ~ U(0, 1) with eta = 4 cos(2 pi (1 - x^2)).
struct PoissonGamData {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> eta;
};

double poisson_gam_eta(double x);
PoissonGamData gen_poisson_gam(int n, std::mt19937_64& rng);

/// Nearest integer (ties to even) of y u1^u2.
double contaminated_count(double y, double u1, double u2);

/// Replaces round(0.05 n) randomly chosen responses by the nearest integer
/// (ties to even) of y u1^u2, u1 ~ U(2, 5), u2 = +/-1. Returns the indices.
std::vector<int> contaminate_poisson(std::vector<double>& y, std::mt19937_64& rng);

enum class MaskSize { Full, Reduced };

/// Irregular elliptical voxel mask on an integer (X, Y) grid. The full mask
/// has exactly 1567 points; the reduced mask keeps points with even X and Y.
struct VoxelMask {
    std::vector<double> X;
    std::vector<double> Y;
};

VoxelMask brain_slice_mask(MaskSize size);

/// Surrogate smooth surfaces for log(mu) and log(sigma).
double gamma_surface_eta1(double X, double Y);
double gamma_surface_eta2(double X, double Y);

struct GammaGamlssData {
    std::vector<double> X;
    std::vector<double> Y;
    std::vector<double> y;
    std::vector<double> eta1;
    std::vector<double> eta2;
};

GammaGamlssData gen_gamma_gamlss(const VoxelMask& mask, std::mt19937_64& rng);

/// Adds 10 to round(0.05 n) responses chosen among the points with X > 70
/// and Y > 30. Throws InvalidArgument when that region is too small.
std::vector<int> contaminate_gamma(GammaGamlssData& data, std::mt19937_64& rng);

double mse(const std::vector<double>& estimate, const std::vector<double>& truth);

enum class DesignKind { PoissonGam, GammaGamlss2D };
enum class EstimatorKind { Classical, RobustEfs, RobustRaic, RobustRbic };

DesignKind design_from_name(const std::string& name);
std::string design_name(DesignKind kind);
EstimatorKind estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorKind kind);

struct StudyConfig {
    DesignKind design = DesignKind::PoissonGam;
    /// Poisson design only; the gamma design takes n from the mask.
    int n = 100;
    MaskSize mask = MaskSize::Reduced;
    int replications = 50;
    bool contaminate = false;
    std::vector<EstimatorKind> estimators{EstimatorKind::Classical, EstimatorKind::RobustEfs};
    /// Robustness constant; NaN means "tune on a pilot replication".
    double c = std::numeric_limits<double>::quiet_NaN();
    double target_mdp = 0.95;
    int mdp_B = 100;
    std::uint64_t seed = 1;
    /// Basis dimensions: Poisson smooth k, tensor margins for the gamma design.
    int k_poisson = 20;
    int k_tensor = 6;
    LambdaGrid grid{1e-4, 1e6, 21};
    FitOptions fit;
    int threads = 1;

    void validate() const;
};

/// Default c per design (used when no tuning is requested).
double default_c(DesignKind kind);

struct ReplicationRecord {
    int replication = 0;
    EstimatorKind estimator = EstimatorKind::Classical;
    bool converged = false;
    bool failed = false;
    std::string message;
    double mse_eta1 = std::numeric_limits<double>::quiet_NaN();
    double mse_eta2 = std::numeric_limits<double>::quiet_NaN();
    double mse_mu = std::numeric_limits<double>::quiet_NaN();
    double mse_sigma = std::numeric_limits<double>::quiet_NaN();
    double edf = std::numeric_limits<double>::quiet_NaN();
    double c = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> contaminated;
    /// Rows ordered by increasing robustness weight.
    std::vector<int> weight_order;
};

struct SummaryRow {
    EstimatorKind estimator = EstimatorKind::Classical;
    std::string target;
    double average = 0.0;
    double sd = 0.0;
    double median = 0.0;
    double iqr = 0.0;
    int count = 0;
};

struct StudyResult {
    StudyConfig config;
    double c = 0.0;
    std::vector<ReplicationRecord> records;
    std::vector<SummaryRow> summary;

    /// Median of a target ("eta1", "eta2", "mu", "sigma", "edf") for one estimator.
    [[nodiscard]] double median(EstimatorKind est, const std::string& target) const;
};

/// Summary statistics (average, SD, median, IQR) of a sample.
SummaryRow summarize(const std::vector<double>& values);

StudyResult run_study(const StudyConfig& config);

/// Builds the data and objective for one replication of a design (used by
/// run_study, the CLI and tests).
struct ReplicationData {
    CovariateTable covariates;
    Eigen::VectorXd y;
    Eigen::MatrixXd eta_true;  ///< n x n_params
    std::vector<int> contaminated;
    std::shared_ptr<const ModelDesign> design;
    FamilyPtr family;
};

ReplicationData make_replication(const StudyConfig& config, int replication);

}  // namespace rgamlss
