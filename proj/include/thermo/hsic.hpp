#pragma once

#include "thermo/thermomics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace thermo {

struct GramMatrix {
    Matrix data;
    bool normalized = false;
};

enum class LabelKernel { Delta, Rbf };

struct SelectionEntry {
    std::string name;
    double weight = 0;
    double score = 0; // weight / max weight
};

struct SelectionResult {
    Vector weights; // one per manifest feature, >= 0; dropped features stay 0
    std::vector<SelectionEntry> ranked;
    std::vector<double> objective_trace; // penalized objective after each descent sweep
    double lambda = 0;
    int delta = 0;
    std::string bandwidth_rule = "median";
    std::uint64_t seed = 0;
};

// K_ij = exp(-(x_i - x_j)^2 / (2 sigma^2))
GramMatrix rbf_gram(const std::vector<double>& x, double sigma);

// Kbar = G K G / ||G K G||_F with G = I - (1/delta) 1 1^T.
GramMatrix center_normalize(const GramMatrix& k);

// tr(Kbar Cbar), the V-statistic inner product of two normalized Grams.
double hsic_v(const GramMatrix& kbar, const GramMatrix& cbar);

// Median pairwise distance, the bandwidth rule used throughout; 1.0 when all
// pairwise distances vanish.
double median_bandwidth(const std::vector<double>& x);

// Block estimator: one seeded shuffle, contiguous blocks of size delta (the
// trailing partial block is dropped), per-block center/normalize, mean over
// the blocks that survive degeneracy checks. delta == n skips the shuffle so
// the estimator degenerates to hsic_v bit-exactly.
double block_hsic(const std::vector<double>& feature, const std::vector<double>& labels,
                  int delta, LabelKernel label_kernel, std::uint64_t seed);

// min_{w>=0} 0.5 w'Mw - h'w + lambda*sum(w) with M_kk' = HSIC_b(X_k, X_k')
// and h_k = HSIC_b(X_k, c), solved by cyclic coordinate descent.
SelectionResult block_hsic_lasso(const FeatureMatrix& fm, int delta, double lambda,
                                 LabelKernel label_kernel, std::uint64_t seed);

// Same, with lambda picked from a 20-point log path as the smallest value
// keeping at most top_k nonzero weights.
SelectionResult block_hsic_lasso_auto(const FeatureMatrix& fm, int delta, int top_k,
                                      LabelKernel label_kernel, std::uint64_t seed);

// First k ranked entries (fewer if fewer weights are nonzero).
std::vector<SelectionEntry> select_top_k(const SelectionResult& result, int k);

void save_selection(const std::filesystem::path& file, const SelectionResult& r,
                    const std::vector<std::string>& comments = {});
SelectionResult load_selection(const std::filesystem::path& file,
                               const std::vector<std::string>& feature_names);

} // namespace thermo
