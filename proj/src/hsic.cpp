#include "thermo/hsic.hpp"

#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace thermo {

GramMatrix rbf_gram(const std::vector<double>& x, double sigma) {
    if (sigma <= 0) throw NonPositiveBandwidth("sigma must be > 0, got " + std::to_string(sigma));
    const long n = static_cast<long>(x.size());
    if (n < 2) throw BlockTooSmall("rbf_gram needs at least 2 samples");
    GramMatrix g;
    g.data.resize(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            const double d = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            g.data(i, j) = std::exp(-d * d / (2 * sigma * sigma));
        }
    return g;
}

GramMatrix center_normalize(const GramMatrix& k) {
    const long n = k.data.rows();
    if (n == 0 || k.data.cols() != n) throw SizeMismatch("Gram matrix must be square");
    const Vector row_means = k.data.rowwise().mean();
    const Eigen::RowVectorXd col_means = k.data.colwise().mean();
    const double grand = k.data.mean();
    GramMatrix out;
    out.data = k.data;
    out.data.colwise() -= row_means;
    out.data.rowwise() -= col_means;
    out.data.array() += grand;
    const double norm = out.data.norm();
    if (norm <= 1e-12)
        throw DegenerateKernel("centered Gram vanishes (constant input)");
    out.data /= norm;
    out.normalized = true;
    return out;
}

double hsic_v(const GramMatrix& kbar, const GramMatrix& cbar) {
    if (!kbar.normalized || !cbar.normalized)
        throw NotNormalized("hsic_v needs center-normalized Grams");
    if (kbar.data.rows() != cbar.data.rows())
        throw SizeMismatch("Gram sizes differ: " + std::to_string(kbar.data.rows()) + " vs " +
                           std::to_string(cbar.data.rows()));
    // tr(K C) for symmetric matrices is the elementwise inner product.
    return (kbar.data.array() * cbar.data.array()).sum();
}

double median_bandwidth(const std::vector<double>& x) {
    std::vector<double> dist;
    dist.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) dist.push_back(std::abs(x[i] - x[j]));
    if (dist.empty()) return 1.0;
    std::sort(dist.begin(), dist.end());
    const std::size_t mid = dist.size() / 2;
    const double med =
        dist.size() % 2 == 1 ? dist[mid] : 0.5 * (dist[mid - 1] + dist[mid]);
    return med > 0 ? med : 1.0;
}

namespace {

std::vector<std::size_t> block_permutation(std::size_t n, int delta, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    if (static_cast<std::size_t>(delta) == n) return perm; // single block, no shuffle
    Rng rng(derive_seed(seed, "block-shuffle"));
    rng.shuffle(perm);
    return perm;
}

Matrix delta_gram(const std::vector<double>& labels) {
    const long n = static_cast<long>(labels.size());
    Matrix g(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            g(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]
                          ? 1.0
                          : 0.0;
    return g;
}

// vec of the centered-normalized Gram of one block, or nullopt if degenerate.
std::optional<Vector> normalized_block_vec(const std::vector<double>& block_vals, double sigma,
                                           bool delta_kernel) {
    GramMatrix g;
    if (delta_kernel)
        g.data = delta_gram(block_vals);
    else
        g = rbf_gram(block_vals, sigma);
    try {
        const GramMatrix nb = center_normalize(g);
        return Vector(Eigen::Map<const Vector>(nb.data.data(), nb.data.size()));
    } catch (const DegenerateKernel&) {
        return std::nullopt;
    }
}

std::vector<double> gather(const std::vector<double>& x, const std::vector<std::size_t>& perm,
                           std::size_t begin, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = x[perm[begin + i]];
    return out;
}

} // namespace

double block_hsic(const std::vector<double>& feature, const std::vector<double>& labels,
                  int delta, LabelKernel label_kernel, std::uint64_t seed) {
    if (feature.size() != labels.size())
        throw SizeMismatch("feature and label sample counts differ");
    const std::size_t n = feature.size();
    if (delta < 2 || static_cast<std::size_t>(delta) > n)
        throw BlockTooSmall("block size " + std::to_string(delta) + " outside [2, " +
                            std::to_string(n) + "]");
    const auto perm = block_permutation(n, delta, seed);
    const std::size_t blocks = n / static_cast<std::size_t>(delta);
    const double sigma_f = median_bandwidth(feature);
    const double sigma_l = median_bandwidth(labels);

    double sum = 0;
    std::size_t survivors = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto fb = gather(feature, perm, b * delta, static_cast<std::size_t>(delta));
        const auto lb = gather(labels, perm, b * delta, static_cast<std::size_t>(delta));
        const auto kv = normalized_block_vec(fb, sigma_f, false);
        const auto cv =
            normalized_block_vec(lb, sigma_l, label_kernel == LabelKernel::Delta);
        if (!kv || !cv) continue;
        sum += kv->dot(*cv);
        ++survivors;
    }
    if (survivors == 0) throw DegenerateKernel("every block degenerated");
    return sum / static_cast<double>(survivors);
}

namespace {

struct BlockVecs {
    // per feature, per block: vec of the normalized Gram (nullopt = degenerate)
    std::vector<std::vector<std::optional<Vector>>> feat;
    std::vector<std::optional<Vector>> label;
    std::vector<long> kept; // original feature indices that survived drops
};

BlockVecs build_block_vecs(const FeatureMatrix& fm, int delta, LabelKernel label_kernel,
                           std::uint64_t seed) {
    const long n = fm.values.rows();
    const long d = fm.values.cols();
    if (n < 2) throw TooFewCases("need at least 2 cases for selection");
    if (delta < 2 || delta > n)
        throw BlockTooSmall("block size " + std::to_string(delta) + " outside [2, " +
                            std::to_string(n) + "]");
    const auto perm = block_permutation(static_cast<std::size_t>(n), delta, seed);
    const std::size_t blocks = static_cast<std::size_t>(n) / static_cast<std::size_t>(delta);

    std::vector<double> labels(fm.labels.begin(), fm.labels.end());
    BlockVecs out;
    out.label.resize(blocks);
    const double sigma_l = median_bandwidth(labels);
    bool any_label_block = false;
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto lb = gather(labels, perm, b * delta, static_cast<std::size_t>(delta));
        out.label[b] = normalized_block_vec(lb, sigma_l, label_kernel == LabelKernel::Delta);
        any_label_block = any_label_block || out.label[b].has_value();
    }
    if (!any_label_block) throw DegenerateKernel("label kernel degenerates in every block");

    for (long k = 0; k < d; ++k) {
        std::vector<double> col(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = fm.values(i, k);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (*lo == *hi) {
            std::cerr << "warning: feature '" << fm.names[static_cast<std::size_t>(k)]
                      << "' is constant, dropped from selection\n";
            continue;
        }
        const double sigma = median_bandwidth(col);
        std::vector<std::optional<Vector>> vecs(blocks);
        bool any = false;
        for (std::size_t b = 0; b < blocks; ++b) {
            vecs[b] = normalized_block_vec(gather(col, perm, b * delta,
                                                  static_cast<std::size_t>(delta)),
                                           sigma, false);
            any = any || vecs[b].has_value();
        }
        if (!any) {
            std::cerr << "warning: feature '" << fm.names[static_cast<std::size_t>(k)]
                      << "' degenerates in every block, dropped from selection\n";
            continue;
        }
        out.feat.push_back(std::move(vecs));
        out.kept.push_back(k);
    }
    if (out.kept.empty()) throw AllFeaturesDegenerate("no usable features for selection");
    return out;
}

// Mean of pairwise block inner products over blocks valid on both sides.
double paired_mean(const std::vector<std::optional<Vector>>& a,
                   const std::vector<std::optional<Vector>>& b) {
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] && b[i]) {
            sum += a[i]->dot(*b[i]);
            ++count;
        }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

SelectionResult solve_lasso(const FeatureMatrix& fm, const BlockVecs& bv, const Matrix& m,
                            const Vector& h, int delta, double lambda,
                            std::uint64_t seed) {
    const long dk = static_cast<long>(bv.kept.size());
    Vector w = Vector::Zero(dk);
    Vector mw = Vector::Zero(dk); // M*w maintained incrementally
    std::vector<double> trace;
    auto objective = [&] { return 0.5 * w.dot(mw) - h.dot(w) + lambda * w.sum(); };
    trace.push_back(objective());
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double max_change = 0;
        for (long k = 0; k < dk; ++k) {
            const double mkk = m(k, k);
            if (mkk <= 0) continue;
            const double num = h[k] - lambda - (mw[k] - mkk * w[k]);
            const double next = std::max(0.0, num / mkk);
            const double change = next - w[k];
            if (change != 0) {
                mw += m.col(k) * change;
                w[k] = next;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        trace.push_back(objective());
        if (max_change < 1e-8) break;
    }

    SelectionResult r;
    r.objective_trace = std::move(trace);
    r.weights = Vector::Zero(fm.values.cols());
    for (long k = 0; k < dk; ++k) r.weights[bv.kept[static_cast<std::size_t>(k)]] = w[k];
    r.lambda = lambda;
    r.delta = delta;
    r.seed = seed;

    std::vector<long> nonzero;
    for (long k = 0; k < r.weights.size(); ++k)
        if (r.weights[k] > 0) nonzero.push_back(k);
    std::stable_sort(nonzero.begin(), nonzero.end(),
                     [&](long a, long b) { return r.weights[a] > r.weights[b]; });
    const double wmax = nonzero.empty() ? 0.0 : r.weights[nonzero.front()];
    for (long k : nonzero) {
        SelectionEntry e;
        e.name = fm.names[static_cast<std::size_t>(k)];
        e.weight = r.weights[k];
        e.score = r.weights[k] / wmax;
        r.ranked.push_back(std::move(e));
    }
    return r;
}

} // namespace

SelectionResult block_hsic_lasso(const FeatureMatrix& fm, int delta, double lambda,
                                 LabelKernel label_kernel, std::uint64_t seed) {
    if (lambda < 0) throw NegativeLambda("lambda must be >= 0, got " + std::to_string(lambda));
    const BlockVecs bv = build_block_vecs(fm, delta, label_kernel, seed);
    const long dk = static_cast<long>(bv.kept.size());
    Vector h(dk);
    for (long k = 0; k < dk; ++k)
        h[k] = paired_mean(bv.feat[static_cast<std::size_t>(k)], bv.label);
    Matrix m(dk, dk);
    for (long a = 0; a < dk; ++a)
        for (long b = a; b < dk; ++b) {
            const double v = paired_mean(bv.feat[static_cast<std::size_t>(a)],
                                         bv.feat[static_cast<std::size_t>(b)]);
            m(a, b) = v;
            m(b, a) = v;
        }
    return solve_lasso(fm, bv, m, h, delta, lambda, seed);
}

SelectionResult block_hsic_lasso_auto(const FeatureMatrix& fm, int delta, int top_k,
                                      LabelKernel label_kernel, std::uint64_t seed) {
    if (top_k < 1) throw ConfigInvalid("top_k must be >= 1");
    const BlockVecs bv = build_block_vecs(fm, delta, label_kernel, seed);
    const long dk = static_cast<long>(bv.kept.size());
    Vector h(dk);
    for (long k = 0; k < dk; ++k)
        h[k] = paired_mean(bv.feat[static_cast<std::size_t>(k)], bv.label);
    Matrix m(dk, dk);
    for (long a = 0; a < dk; ++a)
        for (long b = a; b < dk; ++b) {
            const double v = paired_mean(bv.feat[static_cast<std::size_t>(a)],
                                         bv.feat[static_cast<std::size_t>(b)]);
            m(a, b) = v;
            m(b, a) = v;
        }
    const double lambda_max = std::max(h.maxCoeff(), 1e-12);
    SelectionResult best;
    bool have_best = false;
    for (int i = 0; i < 20; ++i) {
        const double lambda = lambda_max * std::pow(1e-3, static_cast<double>(i) / 19.0);
        SelectionResult r = solve_lasso(fm, bv, m, h, delta, lambda, seed);
        long nonzero = 0;
        for (long k = 0; k < r.weights.size(); ++k)
            if (r.weights[k] > 0) ++nonzero;
        if (nonzero <= top_k) {
            best = std::move(r); // path descends, so this is the smallest so far
            have_best = true;
        }
    }
    if (!have_best) // lambda_max itself always qualifies, but keep a fallback
        best = solve_lasso(fm, bv, m, h, delta, lambda_max, seed);
    return best;
}

std::vector<SelectionEntry> select_top_k(const SelectionResult& result, int k) {
    if (k < 1) return {};
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                   result.ranked.size());
    return {result.ranked.begin(), result.ranked.begin() + static_cast<long>(take)};
}

void save_selection(const std::filesystem::path& file, const SelectionResult& r,
                    const std::vector<std::string>& comments) {
    std::ofstream out(file);
    if (!out) throw UnreadableFile("cannot write " + file.string());
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "rank,feature,weight,relatedness_score\n";
    char buf[64];
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
        out << (i + 1) << "," << r.ranked[i].name << ",";
        std::snprintf(buf, sizeof buf, "%.17g", r.ranked[i].weight);
        out << buf << ",";
        std::snprintf(buf, sizeof buf, "%.17g", r.ranked[i].score);
        out << buf << "\n";
    }
    nlohmann::json j;
    j["lambda"] = r.lambda;
    j["delta"] = r.delta;
    j["bandwidth_rule"] = r.bandwidth_rule;
    j["seed"] = r.seed;
    auto side = file;
    side.replace_filename(file.stem().string() + "_params.json");
    std::ofstream sp(side);
    if (!sp) throw UnreadableFile("cannot write " + side.string());
    sp << j.dump(2) << "\n";
}

SelectionResult load_selection(const std::filesystem::path& file,
                               const std::vector<std::string>& feature_names) {
    std::ifstream in(file);
    if (!in) throw MissingUpstreamArtifact("no selection report at " + file.string());
    SelectionResult r;
    r.weights = Vector::Zero(static_cast<long>(feature_names.size()));
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_done) {
            header_done = true; // column header
            continue;
        }
        std::stringstream ss(line);
        std::string rank, name, weight, score;
        if (!std::getline(ss, rank, ',') || !std::getline(ss, name, ',') ||
            !std::getline(ss, weight, ',') || !std::getline(ss, score))
            throw UnreadableFile("bad selection row: " + line);
        SelectionEntry e;
        e.name = name;
        try {
            e.weight = std::stod(weight);
            e.score = std::stod(score);
        } catch (const std::exception&) {
            throw UnreadableFile("bad numeric cell in selection row: " + line);
        }
        const auto it = std::find(feature_names.begin(), feature_names.end(), name);
        if (it != feature_names.end())
            r.weights[it - feature_names.begin()] = e.weight;
        r.ranked.push_back(std::move(e));
    }
    auto side = file;
    side.replace_filename(file.stem().string() + "_params.json");
    std::ifstream sp(side);
    if (sp) {
        nlohmann::json j;
        try {
            sp >> j;
            r.lambda = j.value("lambda", 0.0);
            r.delta = j.value("delta", 0);
            r.bandwidth_rule = j.value("bandwidth_rule", "median");
            r.seed = j.value("seed", std::uint64_t{0});
        } catch (const nlohmann::json::exception&) {
            // sidecar is advisory; the CSV is the artifact of record
        }
    }
    return r;
}

} // namespace thermo
