#pragma once

#include "thermo/embedding.hpp"
#include "thermo/thermal_data.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace thermo {

inline constexpr int kFeatureCount = 300;

struct FeatureVector {
    std::vector<std::string> names; // manifest order
    Vector values;                  // kFeatureCount reals
};

struct FeatureMatrix {
    std::vector<std::string> names;
    Matrix values; // n_cases x kFeatureCount
    std::vector<std::string> case_ids;
    std::vector<int> labels; // binary
};

// The 300 feature names, fixed order. The text form is the versioned manifest
// shipped with the repo; its hash goes into every feature CSV header.
const std::vector<std::string>& feature_manifest();
std::string feature_manifest_text();
std::uint64_t feature_manifest_hash();

// interqu10, interqu90, max, min, median, mean, IQR, Gray range, MAD, std, skewness
const std::vector<std::string>& first_order_names();
std::vector<double> first_order_features(std::vector<double> pixels);

// Percentile with linear interpolation between closest ranks. q in [0,100].
double percentile(std::vector<double> values, double q);

// L x L co-occurrence matrix of the ROI quantized to `levels` over its own
// min-max, counted symmetrically at the given (distance, angle) offset.
// Angles are restricted to {0, pi/4, pi/2, 3pi/4, pi}.
Matrix tlcm(const Matrix& image, const BoolMask& roi, int distance, double angle,
            int levels = 16);

struct TlcmStats {
    double contrast = 0;
    double dissimilarity = 0;
    double correlation = 0;
    double energy = 0;
    double homogeneity = 0;
    double angular_second_moment = 0;
};
TlcmStats tlcm_features(const Matrix& p);

// Ten named filtered images: LoG sigma 1 and 2, Gabor at four orientations,
// single-level undecimated Haar subbands. Same size as the input, symmetric
// boundary padding.
std::vector<std::pair<std::string, Matrix>> filter_bank(const Matrix& image);

FeatureVector extract_thermomics(const Avatar& a, const RoiMask& roi);

FeatureMatrix extract_feature_matrix(const std::vector<Avatar>& avatars,
                                     const std::vector<RoiMask>& rois,
                                     const std::vector<std::string>& case_ids,
                                     const std::vector<int>& labels);

// CSV with a header row of feature names plus final case_id,label columns.
void save_feature_matrix(const std::filesystem::path& file, const FeatureMatrix& fm,
                         const std::vector<std::string>& comments = {});
FeatureMatrix load_feature_matrix(const std::filesystem::path& file);

} // namespace thermo
