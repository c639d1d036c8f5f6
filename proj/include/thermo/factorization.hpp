#pragma once

#include "thermo/thermal_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace thermo {

enum class FactorMethod { Pct, Nmf, SparseNmf, SemiNmf, DeepSemiNmf };

std::string to_string(FactorMethod m);
FactorMethod factor_method_from_string(const std::string& s);

enum class NmfSolver { MultiplicativeUpdate, Anls };

// Low-rank factorization X ~ B A. Cost convention throughout is
// 0.5*||X - BA||_F^2, plus lambda*||B||_1 for the sparse variant.
struct Factorization {
    Matrix bases;  // MN x k
    Matrix coeffs; // k x tau
    std::vector<double> objective_trace; // element 0 is the cost at init
    FactorMethod method = FactorMethod::Nmf;
};

// X ~ B1 B2 ... Bm Am with nonnegative coefficients at every layer.
struct DeepFactorization {
    std::vector<Matrix> layers;           // B1 (MN x k1), B2 (k1 x k2), ...
    Matrix top_coeffs;                    // Am, km x tau, >= 0
    std::vector<Matrix> per_layer_coeffs; // A1..A_{m-1} from pretraining, >= 0
    std::vector<double> objective_trace;  // element 0 is C_deep after pretraining
};

struct IterOptions {
    int max_iters = 500;
    double tol = 1e-6; // stop when relative cost change drops below this
    std::uint64_t seed = 0;
    NmfSolver solver = NmfSolver::MultiplicativeUpdate;
};

// Top-k left singular directions of the column-mean-centered heat matrix;
// coeffs are the projections, so B*A approximates the centered matrix.
Factorization pct(const HeatMatrix& x, int k);

Factorization nmf(const HeatMatrix& x, int k, const IterOptions& opt = {});
Factorization sparse_nmf(const HeatMatrix& x, int k, double lambda, const IterOptions& opt = {});
Factorization semi_nmf(const HeatMatrix& x, int k, const IterOptions& opt = {});

struct DeepOptions {
    int pretrain_iters = 500;
    int finetune_iters = 200;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

DeepFactorization deep_semi_nmf(const HeatMatrix& x, const std::vector<int>& layer_sizes,
                                const DeepOptions& opt = {});

HeatMatrix reconstruct(const Factorization& f, int m_rows, int n_cols);
HeatMatrix reconstruct(const DeepFactorization& f, int m_rows, int n_cols);

// Product B1*...*Bm, mapping the top-layer bases into pixel space.
Matrix effective_bases(const DeepFactorization& f);

double frobenius_cost(const Matrix& x, const Matrix& approx); // 0.5*||X - approx||_F^2

// ---- serialization (one CSV per factor matrix plus meta.json) ----

void save_factorization(const std::filesystem::path& dir, const Factorization& f,
                        std::uint64_t seed, const std::vector<std::string>& comments = {});
void save_factorization(const std::filesystem::path& dir, const DeepFactorization& f,
                        std::uint64_t seed, const std::vector<std::string>& comments = {});

// Loads either flavor; exactly one of the two outputs is filled.
struct LoadedFactorization {
    FactorMethod method = FactorMethod::Nmf;
    std::optional<Factorization> shallow;
    std::optional<DeepFactorization> deep;
};
LoadedFactorization load_factorization(const std::filesystem::path& dir);

} // namespace thermo
