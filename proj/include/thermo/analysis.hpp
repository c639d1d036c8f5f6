#pragma once

#include "thermo/factorization.hpp"
#include "thermo/thermomics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace thermo {

struct MwuResult {
    double u = 0;         // U statistic of the first sample
    double p_two_sided = 1;
};

// Exact enumeration for tie-free samples with |a|+|b| <= 16, otherwise normal
// approximation with tie and continuity corrections.
MwuResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

struct ForestParams {
    int n_trees = 200;
    int max_depth = 0; // 0 = unlimited
    int min_leaf = 2;
    std::uint64_t seed = 0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    bool votes_positive = false;
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // node 0 is the root
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    long n_features = 0;
};

struct Prediction {
    int label = 0;
    double score = 0; // fraction of trees voting positive
};

FeatureMatrix restrict_features(const FeatureMatrix& fm, const std::vector<std::string>& names);

ForestModel random_forest_fit(const FeatureMatrix& fm, const ForestParams& params);
Prediction random_forest_predict(const ForestModel& model, const Vector& row);

struct Confusion {
    long tp = 0, tn = 0, fp = 0, fn = 0;
};

struct EvalReport {
    double accuracy = 0;
    double accuracy_low = 0;  // Wilson 95% interval
    double accuracy_high = 0;
    double auc = 0;
    std::vector<std::pair<std::string, MwuResult>> mwu; // per feature, class 1 vs 0
    Confusion confusion;
    std::vector<std::string> case_ids;
    std::vector<int> labels;
    std::vector<Prediction> predictions;
    double runtime_seconds = 0; // in-memory only, never serialized
};

EvalReport loocv(const FeatureMatrix& fm, const ForestParams& params);

// Rank form: Mann-Whitney statistic of positive-class scores / (n+ * n-).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Staircase (fpr, tpr) points from (0,0) to (1,1), thresholds descending.
std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& scores,
                                                 const std::vector<int>& labels);

std::pair<double, double> wilson_interval(long correct, long total); // 95%, z = 1.96

// 10*log10(|mean(signal) - mean(noise)|^2 / var(noise)), population variance.
double snr_db(const Matrix& image, const BoolMask& signal_region, const BoolMask& noise_region);

struct TTest {
    double t = 0;
    double p_two_sided = 1;
    double dof = 0;
};
// Welch two-sample t; used as the documented stand-in for method comparisons.
TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct NoiseSweepReport {
    std::vector<double> levels; // percent of dynamic range, strictly increasing
    std::vector<FactorMethod> methods;
    std::vector<double> input_snr; // per level, on the temporal mean frame
    Matrix avatar_snr;             // methods x levels
};

struct SweepOptions {
    int k = 8;
    std::vector<int> layer_sizes = {12, 8};
    int max_iters = 100;
    std::uint64_t seed = 0;
};

// Adds one shared seeded unit noise field scaled per level, refactorizes,
// re-embeds and scores avatar SNR against the mask (signal) and reference
// (noise) regions. Level 0 reproduces the clean pipeline exactly.
NoiseSweepReport noise_robustness_sweep(const ThermalSequence& seq, const RoiMask& roi,
                                        const std::vector<FactorMethod>& methods,
                                        const std::vector<double>& levels,
                                        const SweepOptions& opt);

void save_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                      const std::vector<std::string>& comments = {});
void save_noise_sweep(const std::filesystem::path& file, const NoiseSweepReport& report,
                      const std::vector<std::string>& comments = {});

} // namespace thermo
