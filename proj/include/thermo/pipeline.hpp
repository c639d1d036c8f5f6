#pragma once

#include "thermo/analysis.hpp"
#include "thermo/factorization.hpp"
#include "thermo/hsic.hpp"
#include "thermo/phantom.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thermo {

// Orchestration config, loaded from one JSON file (comments allowed). Unknown
// keys anywhere are rejected so typos cannot silently fall back to defaults.

struct PhantomCohortConfig {
    int n_cases = 60;
    double lesion_fraction = 0.5;
    PhantomParams params; // template; lesions and per-case seeds are generated
};

struct FactorizationConfig {
    FactorMethod method = FactorMethod::DeepSemiNmf;
    int k = 8;                           // shallow methods
    std::vector<int> layer_sizes = {12, 8}; // deep method
    int max_iters = 500;
    int pretrain_iters = 500;
    int finetune_iters = 200;
    double tol = 1e-6;
    double lambda = 0.1; // sparse variant only
    NmfSolver solver = NmfSolver::MultiplicativeUpdate;
};

struct SelectionConfig {
    int delta = 20;               // block size over samples
    std::optional<double> lambda; // absent = automatic 20-point log path
    int top_k = 3;
    LabelKernel label_kernel = LabelKernel::Delta;
};

struct AnalysisConfig {
    int n_trees = 200;
    int max_depth = 0; // 0 = unbounded
    int min_leaf = 2;
    std::vector<double> noise_levels = {0, 3, 5, 10, 15, 20}; // percent of range
    std::vector<FactorMethod> sweep_methods = {
        FactorMethod::Pct, FactorMethod::Nmf, FactorMethod::SparseNmf,
        FactorMethod::SemiNmf, FactorMethod::DeepSemiNmf};
    int sweep_k = 8;
    std::vector<int> sweep_layer_sizes = {12, 8};
    int sweep_max_iters = 100;
};

struct PipelineConfig {
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    int jobs = 1;
    // exactly one of the two input modes
    std::optional<std::filesystem::path> cohort_dir; // pre-existing cohort
    FrameFormat input_format = FrameFormat::CsvFrames;
    std::optional<PhantomCohortConfig> phantom;      // generated cohort
    FactorizationConfig factorization;
    bool normalize_avatars = true;
    std::string manifest_version = "thermomics-v1";
    SelectionConfig selection;
    AnalysisConfig analysis;
};

PipelineConfig load_config(const std::filesystem::path& file);
PipelineConfig parse_config_text(const std::string& json_text);

// FNV-1a over the canonical serialized form (defaults filled in, keys sorted),
// stamped into every artifact header so stale outputs are detectable.
std::uint64_t config_hash(const PipelineConfig& cfg);
std::string canonical_config_text(const PipelineConfig& cfg);

// Stages. Each is idempotent given identical inputs, config and seed, checks
// that its upstream artifacts exist, and writes under cfg.output_dir.
void cmd_phantom(const PipelineConfig& cfg);
void cmd_factorize(const PipelineConfig& cfg);
void cmd_embed(const PipelineConfig& cfg);
void cmd_features(const PipelineConfig& cfg);
void cmd_select(const PipelineConfig& cfg);
void cmd_classify(const PipelineConfig& cfg);
void cmd_sweep(const PipelineConfig& cfg);
void cmd_pipeline(const PipelineConfig& cfg); // all of the above in order

} // namespace thermo
