#include "thermo/factorization.hpp"

#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

#include <json.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace thermo {

namespace {

constexpr double kEps = 1e-12; // denominator guard in multiplicative updates
constexpr double kRidge = 1e-12;

void check_rank(const Matrix& x, int k) {
    const long lim = std::min(x.rows(), x.cols());
    if (k < 1 || k > lim)
        throw RankTooLarge("rank " + std::to_string(k) + " outside [1, " + std::to_string(lim) + "]");
}

double mean_abs(const Matrix& x) {
    return x.size() == 0 ? 0.0 : x.array().abs().mean();
}

// Seeded uniform(0,1) entries scaled by sqrt(mean(|X|)/k).
Matrix init_uniform(long rows, long cols, double scale, Rng& rng) {
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = rng.uniform01() * scale;
    return m;
}

Matrix positive_part(const Matrix& m) { return (m.array().abs() + m.array()) * 0.5; }
Matrix negative_part(const Matrix& m) { return (m.array().abs() - m.array()) * 0.5; }

// Exact least-squares basis step B = X A^T (A A^T + ridge I)^-1.
Matrix semi_b_step(const Matrix& x, const Matrix& a) {
    const long k = a.rows();
    Matrix gram = a * a.transpose();
    gram.diagonal().array() += kRidge;
    const Matrix rhs = a * x.transpose(); // k x MN
    return gram.ldlt().solve(rhs).transpose();
}

// Multiplicative coefficient step from the semi-NMF update rules, using
// positive/negative part splitting. Keeps A >= 0 and does not increase
// 0.5*||X - basis*A||^2.
Matrix semi_a_step(const Matrix& x, const Matrix& basis, const Matrix& a) {
    const Matrix p = basis.transpose() * x;     // k x tau
    const Matrix g = basis.transpose() * basis; // k x k
    const Matrix num = positive_part(p) + negative_part(g) * a;
    const Matrix den = negative_part(p) + positive_part(g) * a;
    Matrix out = a;
    out.array() *= (num.array() / (den.array() + kEps)).sqrt();
    return out;
}

bool converged(double prev, double cur, double tol) {
    return std::abs(prev - cur) <= tol * std::max(std::abs(prev), 1e-300);
}

// Nonnegative quadratic program min 0.5 x'Qx - d'x s.t. x >= 0 via active set.
// Q must be symmetric positive definite (callers add a ridge).
Vector nnls_qp(const Matrix& q, const Vector& d) {
    const long n = q.rows();
    Vector x = Vector::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, d.cwiseAbs().maxCoeff());
    for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
        const Vector w = d - q * x;
        long best = -1;
        double best_w = tol;
        for (long i = 0; i < n; ++i)
            if (!passive[static_cast<std::size_t>(i)] && w[i] > best_w) {
                best_w = w[i];
                best = i;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;
        for (int inner = 0; inner < 5 * static_cast<int>(n) + 10; ++inner) {
            std::vector<long> idx;
            for (long i = 0; i < n; ++i)
                if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
            Matrix qp(idx.size(), idx.size());
            Vector dp(idx.size());
            for (std::size_t a = 0; a < idx.size(); ++a) {
                dp[static_cast<long>(a)] = d[idx[a]];
                for (std::size_t b = 0; b < idx.size(); ++b) qp(static_cast<long>(a), static_cast<long>(b)) = q(idx[a], idx[b]);
            }
            const Vector z = qp.ldlt().solve(dp);
            if ((z.array() > 0).all()) {
                x.setZero();
                for (std::size_t a = 0; a < idx.size(); ++a) x[idx[a]] = z[static_cast<long>(a)];
                break;
            }
            double alpha = 1.0;
            for (std::size_t a = 0; a < idx.size(); ++a)
                if (z[static_cast<long>(a)] <= 0) {
                    const double xa = x[idx[a]];
                    if (xa - z[static_cast<long>(a)] > 0) alpha = std::min(alpha, xa / (xa - z[static_cast<long>(a)]));
                }
            for (std::size_t a = 0; a < idx.size(); ++a) {
                x[idx[a]] += alpha * (z[static_cast<long>(a)] - x[idx[a]]);
                if (x[idx[a]] <= 1e-14) {
                    x[idx[a]] = 0.0;
                    passive[static_cast<std::size_t>(idx[a])] = false;
                }
            }
        }
    }
    return x;
}

Factorization run_nmf(const Matrix& x, int k, double lambda, const IterOptions& opt,
                      FactorMethod method) {
    Rng rng(opt.seed);
    const double scale = std::sqrt(std::max(mean_abs(x), 0.0) / k);
    Matrix b = init_uniform(x.rows(), k, scale, rng);
    Matrix a = init_uniform(k, x.cols(), scale, rng);

    auto cost = [&]() { return frobenius_cost(x, b * a) + lambda * b.sum(); };
    Factorization f;
    f.method = method;
    f.objective_trace.push_back(cost());
    for (int it = 0; it < opt.max_iters; ++it) {
        if (opt.solver == NmfSolver::MultiplicativeUpdate) {
            const Matrix btx = b.transpose() * x;
            const Matrix btb = b.transpose() * b;
            a.array() *= btx.array() / ((btb * a).array() + kEps);
            const Matrix xat = x * a.transpose();
            const Matrix aat = a * a.transpose();
            b.array() *= xat.array() / ((b * aat).array() + lambda + kEps);
        } else {
            Matrix gram_b = b.transpose() * b;
            gram_b.diagonal().array() += kRidge;
            const Matrix btx = b.transpose() * x;
            for (long t = 0; t < a.cols(); ++t) a.col(t) = nnls_qp(gram_b, btx.col(t));
            Matrix gram_a = a * a.transpose();
            gram_a.diagonal().array() += kRidge;
            const Matrix axt = a * x.transpose(); // k x MN
            for (long r = 0; r < b.rows(); ++r)
                b.row(r) = nnls_qp(gram_a, axt.col(r) - Vector::Constant(k, lambda)).transpose();
        }
        f.objective_trace.push_back(cost());
        const auto n = f.objective_trace.size();
        if (converged(f.objective_trace[n - 2], f.objective_trace[n - 1], opt.tol)) break;
    }
    f.bases = std::move(b);
    f.coeffs = std::move(a);
    return f;
}

// Shared init so deep pretraining of layer 1 and plain semi-NMF start from
// the same state for a given root seed.
void init_semi(const Matrix& x, int k, std::uint64_t seed, Matrix& b, Matrix& a) {
    Matrix centered = x;
    const Eigen::RowVectorXd col_means = x.colwise().mean();
    centered.rowwise() -= col_means;
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    b = svd.matrixU().leftCols(k);
    Rng rng(seed);
    const double scale = std::sqrt(std::max(mean_abs(x), 0.0) / k);
    a = init_uniform(k, x.cols(), scale, rng);
}

Factorization run_semi_nmf(const Matrix& x, int k, const IterOptions& opt) {
    Matrix b, a;
    init_semi(x, k, derive_seed(opt.seed, "semi-layer1"), b, a);
    Factorization f;
    f.method = FactorMethod::SemiNmf;
    f.objective_trace.push_back(frobenius_cost(x, b * a));
    for (int it = 0; it < opt.max_iters; ++it) {
        b = semi_b_step(x, a);
        a = semi_a_step(x, b, a);
        f.objective_trace.push_back(frobenius_cost(x, b * a));
        const auto n = f.objective_trace.size();
        if (converged(f.objective_trace[n - 2], f.objective_trace[n - 1], opt.tol)) break;
    }
    f.bases = std::move(b);
    f.coeffs = std::move(a);
    return f;
}

} // namespace

std::string to_string(FactorMethod m) {
    switch (m) {
        case FactorMethod::Pct: return "pct";
        case FactorMethod::Nmf: return "nmf";
        case FactorMethod::SparseNmf: return "sparse_nmf";
        case FactorMethod::SemiNmf: return "semi_nmf";
        case FactorMethod::DeepSemiNmf: return "deep_semi_nmf";
    }
    return "unknown";
}

FactorMethod factor_method_from_string(const std::string& s) {
    if (s == "pct") return FactorMethod::Pct;
    if (s == "nmf") return FactorMethod::Nmf;
    if (s == "sparse_nmf") return FactorMethod::SparseNmf;
    if (s == "semi_nmf") return FactorMethod::SemiNmf;
    if (s == "deep_semi_nmf") return FactorMethod::DeepSemiNmf;
    throw ConfigInvalid("unknown factorization method '" + s + "'");
}

double frobenius_cost(const Matrix& x, const Matrix& approx) {
    return 0.5 * (x - approx).squaredNorm();
}

Factorization pct(const HeatMatrix& x, int k) {
    check_rank(x.data, k);
    Matrix centered = x.data;
    const Eigen::RowVectorXd col_means = x.data.colwise().mean();
    centered.rowwise() -= col_means;
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    Factorization f;
    f.method = FactorMethod::Pct;
    f.bases = svd.matrixU().leftCols(k);
    f.coeffs = f.bases.transpose() * centered;
    const auto& s = svd.singularValues();
    double discarded = 0.0;
    for (long i = k; i < s.size(); ++i) discarded += s[i] * s[i];
    f.objective_trace.push_back(0.5 * discarded);
    return f;
}

Factorization nmf(const HeatMatrix& x, int k, const IterOptions& opt) {
    check_rank(x.data, k);
    if ((x.data.array() < 0).any()) throw NegativeInput("nmf requires a nonnegative heat matrix");
    return run_nmf(x.data, k, 0.0, opt, FactorMethod::Nmf);
}

Factorization sparse_nmf(const HeatMatrix& x, int k, double lambda, const IterOptions& opt) {
    check_rank(x.data, k);
    if ((x.data.array() < 0).any())
        throw NegativeInput("sparse_nmf requires a nonnegative heat matrix");
    if (lambda < 0) throw NegativeLambda("lambda must be >= 0, got " + std::to_string(lambda));
    return run_nmf(x.data, k, lambda, opt, FactorMethod::SparseNmf);
}

Factorization semi_nmf(const HeatMatrix& x, int k, const IterOptions& opt) {
    check_rank(x.data, k);
    return run_semi_nmf(x.data, k, opt);
}

DeepFactorization deep_semi_nmf(const HeatMatrix& x, const std::vector<int>& layer_sizes,
                                const DeepOptions& opt) {
    if (layer_sizes.empty()) throw BadLayerSizes("layer_sizes must not be empty");
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
        if (layer_sizes[i] < 1) throw BadLayerSizes("layer sizes must be >= 1");
        if (i > 0 && layer_sizes[i] > layer_sizes[i - 1])
            throw BadLayerSizes("layer sizes must be non-increasing");
    }
    check_rank(x.data, layer_sizes.front());
    const int m = static_cast<int>(layer_sizes.size());

    DeepFactorization deep;
    // Pretraining: X ~ B1 A1, then each coefficient matrix A_{i-1} ~ B_i A_i.
    Matrix current = x.data;
    for (int i = 0; i < m; ++i) {
        IterOptions layer_opt;
        layer_opt.max_iters = opt.pretrain_iters;
        layer_opt.tol = opt.tol;
        Matrix b, a;
        init_semi(current, layer_sizes[static_cast<std::size_t>(i)],
                  derive_seed(opt.seed, i == 0 ? "semi-layer1" : "semi-layer" + std::to_string(i + 1)),
                  b, a);
        for (int it = 0; it < layer_opt.max_iters; ++it) {
            const double before = frobenius_cost(current, b * a);
            b = semi_b_step(current, a);
            a = semi_a_step(current, b, a);
            if (converged(before, frobenius_cost(current, b * a), opt.tol)) break;
        }
        deep.layers.push_back(std::move(b));
        if (i + 1 < m) deep.per_layer_coeffs.push_back(a);
        current = std::move(a); // decompose the coefficients next
    }
    deep.top_coeffs = std::move(current);

    auto product_of_layers = [&deep]() {
        Matrix p = deep.layers.front();
        for (std::size_t i = 1; i < deep.layers.size(); ++i) p = p * deep.layers[i];
        return p;
    };
    double cost = frobenius_cost(x.data, product_of_layers() * deep.top_coeffs);
    deep.objective_trace.push_back(cost);

    // Fine-tuning: exact least-squares per basis factor, multiplicative step
    // for the top coefficients, with rollback of any step that raises C_deep.
    for (int sweep = 0; sweep < opt.finetune_iters; ++sweep) {
        for (int i = 0; i < m; ++i) {
            const Matrix old = deep.layers[static_cast<std::size_t>(i)];
            // Q = B_{i+1} ... B_m A_m
            Matrix q = deep.top_coeffs;
            for (int j = m - 1; j > i; --j) q = deep.layers[static_cast<std::size_t>(j)] * q;
            if (i == 0) {
                deep.layers[0] = semi_b_step(x.data, q);
            } else {
                Matrix p = deep.layers[0];
                for (int j = 1; j < i; ++j) p = p * deep.layers[static_cast<std::size_t>(j)];
                Matrix gp = p.transpose() * p;
                gp.diagonal().array() += kRidge;
                const Matrix t1 = gp.ldlt().solve(p.transpose() * x.data); // k_{i-1} x tau
                Matrix gq = q * q.transpose();
                gq.diagonal().array() += kRidge;
                deep.layers[static_cast<std::size_t>(i)] = gq.ldlt().solve(q * t1.transpose()).transpose();
            }
            const double c_new = frobenius_cost(x.data, product_of_layers() * deep.top_coeffs);
            if (c_new > cost) {
                deep.layers[static_cast<std::size_t>(i)] = old;
            } else {
                cost = c_new;
            }
        }
        {
            const Matrix psi = product_of_layers();
            const Matrix old = deep.top_coeffs;
            deep.top_coeffs = semi_a_step(x.data, psi, deep.top_coeffs);
            const double c_new = frobenius_cost(x.data, psi * deep.top_coeffs);
            if (c_new > cost) {
                deep.top_coeffs = old;
            } else {
                cost = c_new;
            }
        }
        deep.objective_trace.push_back(cost);
        const auto n = deep.objective_trace.size();
        if (converged(deep.objective_trace[n - 2], deep.objective_trace[n - 1], opt.tol)) break;
    }
    return deep;
}

HeatMatrix reconstruct(const Factorization& f, int m_rows, int n_cols) {
    HeatMatrix x;
    x.m_rows = m_rows;
    x.n_cols = n_cols;
    x.data = f.bases * f.coeffs;
    if (x.data.rows() != static_cast<long>(m_rows) * n_cols)
        throw ShapeInconsistent("factor rows do not match M*N");
    return x;
}

HeatMatrix reconstruct(const DeepFactorization& f, int m_rows, int n_cols) {
    HeatMatrix x;
    x.m_rows = m_rows;
    x.n_cols = n_cols;
    x.data = effective_bases(f) * f.top_coeffs;
    if (x.data.rows() != static_cast<long>(m_rows) * n_cols)
        throw ShapeInconsistent("factor rows do not match M*N");
    return x;
}

Matrix effective_bases(const DeepFactorization& f) {
    if (f.layers.empty()) throw EmptyMatrix("deep factorization has no layers");
    Matrix p = f.layers.front();
    for (std::size_t i = 1; i < f.layers.size(); ++i) p = p * f.layers[i];
    return p;
}

// ---- serialization ----

namespace {

nlohmann::json base_meta(FactorMethod method, std::uint64_t seed, const std::vector<double>& trace) {
    nlohmann::json j;
    j["method"] = to_string(method);
    j["seed"] = seed;
    j["iterations"] = trace.empty() ? 0 : trace.size() - 1;
    j["final_cost"] = trace.empty() ? 0.0 : trace.back();
    return j;
}

void write_meta(const std::filesystem::path& dir, const nlohmann::json& j) {
    std::ofstream out(dir / "meta.json");
    if (!out) throw UnreadableFile("cannot write " + (dir / "meta.json").string());
    out << j.dump(2) << "\n";
}

void write_trace(const std::filesystem::path& dir, const std::vector<double>& trace) {
    Matrix t(static_cast<long>(trace.size()), 1);
    for (std::size_t i = 0; i < trace.size(); ++i) t(static_cast<long>(i), 0) = trace[i];
    write_csv_matrix(dir / "trace.csv", t);
}

} // namespace

void save_factorization(const std::filesystem::path& dir, const Factorization& f,
                        std::uint64_t seed, const std::vector<std::string>& comments) {
    std::filesystem::create_directories(dir);
    write_csv_matrix(dir / "B.csv", f.bases, comments);
    write_csv_matrix(dir / "A.csv", f.coeffs, comments);
    write_trace(dir, f.objective_trace);
    nlohmann::json j = base_meta(f.method, seed, f.objective_trace);
    j["k"] = f.bases.cols();
    write_meta(dir, j);
}

void save_factorization(const std::filesystem::path& dir, const DeepFactorization& f,
                        std::uint64_t seed, const std::vector<std::string>& comments) {
    std::filesystem::create_directories(dir);
    std::vector<long> sizes;
    for (std::size_t i = 0; i < f.layers.size(); ++i) {
        write_csv_matrix(dir / ("B" + std::to_string(i + 1) + ".csv"), f.layers[i], comments);
        sizes.push_back(f.layers[i].cols());
    }
    write_csv_matrix(dir / "A.csv", f.top_coeffs, comments);
    for (std::size_t i = 0; i < f.per_layer_coeffs.size(); ++i)
        write_csv_matrix(dir / ("A" + std::to_string(i + 1) + ".csv"), f.per_layer_coeffs[i], comments);
    write_trace(dir, f.objective_trace);
    nlohmann::json j = base_meta(FactorMethod::DeepSemiNmf, seed, f.objective_trace);
    j["layer_sizes"] = sizes;
    write_meta(dir, j);
}

LoadedFactorization load_factorization(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw MissingUpstreamArtifact("no factorization metadata in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UnreadableFile("bad meta.json in " + dir.string() + ": " + e.what());
    }
    LoadedFactorization out;
    out.method = factor_method_from_string(j.at("method").get<std::string>());
    const Matrix trace = read_csv_matrix(dir / "trace.csv");
    std::vector<double> tvec(trace.data(), trace.data() + trace.size());
    if (out.method == FactorMethod::DeepSemiNmf) {
        DeepFactorization f;
        const auto sizes = j.at("layer_sizes").get<std::vector<long>>();
        for (std::size_t i = 0; i < sizes.size(); ++i)
            f.layers.push_back(read_csv_matrix(dir / ("B" + std::to_string(i + 1) + ".csv")));
        f.top_coeffs = read_csv_matrix(dir / "A.csv");
        for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
            const auto p = dir / ("A" + std::to_string(i + 1) + ".csv");
            if (std::filesystem::exists(p)) f.per_layer_coeffs.push_back(read_csv_matrix(p));
        }
        f.objective_trace = std::move(tvec);
        out.deep = std::move(f);
    } else {
        Factorization f;
        f.method = out.method;
        f.bases = read_csv_matrix(dir / "B.csv");
        f.coeffs = read_csv_matrix(dir / "A.csv");
        f.objective_trace = std::move(tvec);
        out.shallow = std::move(f);
    }
    return out;
}

} // namespace thermo
