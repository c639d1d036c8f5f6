#pragma once

#include "thermo/factorization.hpp"
#include "thermo/thermal_data.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace thermo {

struct NormalizationRecord {
    bool applied = false;
    double reference_mean = 0.0;
    double reference_std = 0.0;
};

// One representative image per case, collapsed from k basis columns.
struct Avatar {
    Matrix image; // M x N
    FactorMethod source_method = FactorMethod::Pct;
    NormalizationRecord normalization;
};

// Fraction of zero entries of a matrix, where zero means |q| <= zero_eps.
// Iterative solvers leave denormal-scale residue, hence the absolute cutoff.
double sparsity(const Matrix& q, double zero_eps = 1e-12);

// Elementwise membership map per basis column: eta_i = exp((beta_i - mu) / sigma_i)
// with mu the grand mean over all basis entries and sigma_i the sample standard
// deviation of column i. A column with sigma_i < 1e-12 gets eta_i = 1 (a constant
// basis carries no heterogeneity).
Matrix memberships(const Matrix& bases);

// Phi = sum_i beta_i .* eta_i, reshaped to M x N.
Avatar embed(const Matrix& bases, int m_rows, int n_cols,
             FactorMethod source_method = FactorMethod::Pct);

// (image - mean(reference)) / (std(reference) + 1e-12), population std.
Avatar normalize_by_reference(const Avatar& a, const RoiMask& roi);

// CSV matrix plus 16-bit PNG preview plus normalization stats sidecar.
void save_avatar(const std::filesystem::path& dir, const Avatar& a,
                 const std::vector<std::string>& comments = {});
Avatar load_avatar(const std::filesystem::path& dir);

} // namespace thermo
