#include "thermo/analysis.hpp"

#include "thermo/embedding.hpp"
#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace thermo {

namespace {

// Midranks of the concatenated sample (1-based).
std::vector<double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

// Count of rank assignments with a given U value, sizes (m, n). Counts fit in
// doubles exactly for m + n <= 16.
std::vector<double> u_distribution(int m, int n) {
    std::vector<std::vector<std::vector<double>>> dp(
        static_cast<std::size_t>(m) + 1,
        std::vector<std::vector<double>>(static_cast<std::size_t>(n) + 1,
                                         std::vector<double>(static_cast<std::size_t>(m * n) + 1,
                                                             0.0)));
    for (int j = 0; j <= n; ++j) dp[0][static_cast<std::size_t>(j)][0] = 1.0;
    for (int i = 1; i <= m; ++i) dp[static_cast<std::size_t>(i)][0][0] = 1.0;
    for (int i = 1; i <= m; ++i)
        for (int j = 1; j <= n; ++j)
            for (int u = 0; u <= i * j; ++u) {
                double v = dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)]
                             [static_cast<std::size_t>(u)];
                if (u >= j)
                    v += dp[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)]
                           [static_cast<std::size_t>(u - j)];
                dp[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                  [static_cast<std::size_t>(u)] = v;
            }
    return dp[static_cast<std::size_t>(m)][static_cast<std::size_t>(n)];
}

bool has_ties(const std::vector<double>& pooled) {
    std::vector<double> s = pooled;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) != s.end();
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Regularized incomplete beta via Lentz's continued fraction.
double betacf(double a, double b, double x) {
    constexpr int max_iter = 200;
    constexpr double eps = 3e-14, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1, qam = a - 1;
    double c = 1, d = 1 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < eps) break;
    }
    return h;
}

double ibeta_reg(double a, double b, double x) {
    if (x <= 0) return 0;
    if (x >= 1) return 1;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1) / (a + b + 2)) return front * betacf(a, b, x) / a;
    return 1 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log1p(-x) + a * std::log(x)) *
                   betacf(b, a, 1 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0) return 1.0;
    return ibeta_reg(dof / 2, 0.5, dof / (dof + t * t));
}

} // namespace

MwuResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw EmptySample("both samples must be nonempty");
    const double m = static_cast<double>(a.size());
    const double n = static_cast<double>(b.size());
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);
    double rank_sum_a = 0;
    for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];
    MwuResult r;
    r.u = rank_sum_a - m * (m + 1) / 2;

    const bool tied = has_ties(pooled);
    if (!tied && a.size() + b.size() <= 16) {
        const auto dist = u_distribution(static_cast<int>(a.size()), static_cast<int>(b.size()));
        const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
        const auto u_obs = static_cast<std::size_t>(std::llround(r.u));
        double below = 0, above = 0;
        for (std::size_t u = 0; u < dist.size(); ++u) {
            if (u <= u_obs) below += dist[u];
            if (u >= u_obs) above += dist[u];
        }
        r.p_two_sided = std::min(1.0, 2.0 * std::min(below, above) / total);
        return r;
    }

    const double big_n = m + n;
    double tie_term = 0;
    {
        std::vector<double> s = pooled;
        std::sort(s.begin(), s.end());
        std::size_t i = 0;
        while (i < s.size()) {
            std::size_t j = i;
            while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }
    const double var_u =
        m * n / 12.0 * (big_n + 1 - tie_term / (big_n * (big_n - 1)));
    if (var_u <= 0) {
        r.p_two_sided = 1.0; // every observation tied
        return r;
    }
    const double mu_u = m * n / 2;
    const double num = std::max(0.0, std::abs(r.u - mu_u) - 0.5); // continuity correction
    r.p_two_sided = std::min(1.0, 2.0 * normal_sf(num / std::sqrt(var_u)));
    return r;
}

FeatureMatrix restrict_features(const FeatureMatrix& fm, const std::vector<std::string>& names) {
    FeatureMatrix out;
    out.names = names;
    out.case_ids = fm.case_ids;
    out.labels = fm.labels;
    out.values.resize(fm.values.rows(), static_cast<long>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto it = std::find(fm.names.begin(), fm.names.end(), names[j]);
        if (it == fm.names.end())
            throw ConfigInvalid("unknown feature '" + names[j] + "'");
        out.values.col(static_cast<long>(j)) = fm.values.col(it - fm.names.begin());
    }
    return out;
}

namespace {

struct TreeBuilder {
    const Matrix& x;
    const std::vector<int>& labels;
    const ForestParams& params;
    Rng& rng;
    DecisionTree tree;

    int build(const std::vector<long>& idx, int depth) {
        long pos = 0;
        for (long i : idx) pos += labels[static_cast<std::size_t>(i)];
        const long neg = static_cast<long>(idx.size()) - pos;
        const int depth_cap = params.max_depth > 0 ? params.max_depth : 64;

        auto make_leaf = [&]() {
            TreeNode leaf;
            leaf.votes_positive = pos > neg;
            tree.nodes.push_back(leaf);
            return static_cast<int>(tree.nodes.size()) - 1;
        };
        if (pos == 0 || neg == 0 || depth >= depth_cap ||
            static_cast<long>(idx.size()) < 2 * params.min_leaf)
            return make_leaf();

        const long d = x.cols();
        const long mtry = static_cast<long>(std::ceil(std::sqrt(static_cast<double>(d))));
        std::vector<long> features(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 0);
        // partial Fisher-Yates: first mtry entries are the sampled features
        for (long i = 0; i < mtry; ++i) {
            const std::size_t j = i + rng.uniform_index(static_cast<std::size_t>(d - i));
            std::swap(features[static_cast<std::size_t>(i)], features[j]);
        }

        const double parent_gini =
            1.0 - std::pow(static_cast<double>(pos) / idx.size(), 2) -
            std::pow(static_cast<double>(neg) / idx.size(), 2);
        long best_feature = -1;
        double best_threshold = 0, best_gini = parent_gini - 1e-12;

        std::vector<std::pair<double, int>> vals(idx.size());
        for (long f = 0; f < mtry; ++f) {
            const long feat = features[static_cast<std::size_t>(f)];
            for (std::size_t i = 0; i < idx.size(); ++i)
                vals[i] = {x(idx[i], feat), labels[static_cast<std::size_t>(idx[i])]};
            std::sort(vals.begin(), vals.end());
            long left_pos = 0, left_n = 0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left_pos += vals[i].second;
                ++left_n;
                if (vals[i].first == vals[i + 1].first) continue;
                const long right_n = static_cast<long>(vals.size()) - left_n;
                if (left_n < params.min_leaf || right_n < params.min_leaf) continue;
                const long right_pos = pos - left_pos;
                const double gl = 1.0 - std::pow(static_cast<double>(left_pos) / left_n, 2) -
                                  std::pow(static_cast<double>(left_n - left_pos) / left_n, 2);
                const double gr = 1.0 - std::pow(static_cast<double>(right_pos) / right_n, 2) -
                                  std::pow(static_cast<double>(right_n - right_pos) / right_n, 2);
                const double g = (gl * left_n + gr * right_n) / static_cast<double>(vals.size());
                if (g < best_gini) {
                    best_gini = g;
                    best_feature = feat;
                    best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return make_leaf();

        std::vector<long> left_idx, right_idx;
        for (long i : idx)
            (x(i, best_feature) < best_threshold ? left_idx : right_idx).push_back(i);
        if (left_idx.empty() || right_idx.empty()) return make_leaf();

        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[static_cast<std::size_t>(node_id)].feature = static_cast<int>(best_feature);
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best_threshold;
        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = left;
        tree.nodes[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }
};

} // namespace

ForestModel random_forest_fit(const FeatureMatrix& fm, const ForestParams& params) {
    const long n = fm.values.rows();
    if (n < 2) throw TooFewCases("need at least 2 cases, got " + std::to_string(n));
    long pos = 0;
    for (int l : fm.labels) pos += l;
    if (pos == 0 || pos == n) throw SingleClass("both classes must be present");

    ForestModel model;
    model.n_features = fm.values.cols();
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(derive_seed(params.seed, "tree" + std::to_string(t)));
        std::vector<long> sample(static_cast<std::size_t>(n));
        for (auto& s : sample)
            s = static_cast<long>(rng.uniform_index(static_cast<std::size_t>(n)));
        TreeBuilder builder{fm.values, fm.labels, params, rng, {}};
        builder.build(sample, 0);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

Prediction random_forest_predict(const ForestModel& model, const Vector& row) {
    if (row.size() != model.n_features)
        throw SizeMismatch("row has " + std::to_string(row.size()) + " features, model expects " +
                           std::to_string(model.n_features));
    long votes = 0;
    for (const auto& tree : model.trees) {
        int node = 0; // the builder always places the root first
        while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
            const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
            node = row[nd.feature] < nd.threshold ? nd.left : nd.right;
        }
        votes += tree.nodes[static_cast<std::size_t>(node)].votes_positive ? 1 : 0;
    }
    Prediction p;
    p.score = static_cast<double>(votes) / static_cast<double>(model.trees.size());
    p.label = p.score > 0.5 ? 1 : 0;
    return p;
}

std::pair<double, double> wilson_interval(long correct, long total) {
    constexpr double z = 1.96;
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(correct) / n;
    const double denom = 1 + z * z / n;
    const double center = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

EvalReport loocv(const FeatureMatrix& fm, const ForestParams& params) {
    const long n = fm.values.rows();
    if (n < 3) throw TooFewCases("leave-one-out needs at least 3 cases");
    const auto t0 = std::chrono::steady_clock::now();

    EvalReport report;
    report.case_ids = fm.case_ids;
    report.labels = fm.labels;
    report.predictions.resize(static_cast<std::size_t>(n));
    for (long held = 0; held < n; ++held) {
        FeatureMatrix train;
        train.names = fm.names;
        train.values.resize(n - 1, fm.values.cols());
        long w = 0;
        for (long i = 0; i < n; ++i) {
            if (i == held) continue;
            train.values.row(w++) = fm.values.row(i);
            train.case_ids.push_back(fm.case_ids[static_cast<std::size_t>(i)]);
            train.labels.push_back(fm.labels[static_cast<std::size_t>(i)]);
        }
        ForestParams fold_params = params;
        fold_params.seed = derive_seed(params.seed, "fold" + std::to_string(held));
        const ForestModel model = random_forest_fit(train, fold_params);
        report.predictions[static_cast<std::size_t>(held)] =
            random_forest_predict(model, fm.values.row(held).transpose());
    }

    long correct = 0;
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const auto& p = report.predictions[static_cast<std::size_t>(i)];
        const int truth = fm.labels[static_cast<std::size_t>(i)];
        if (p.label == truth) ++correct;
        if (truth == 1)
            p.label == 1 ? ++report.confusion.tp : ++report.confusion.fn;
        else
            p.label == 1 ? ++report.confusion.fp : ++report.confusion.tn;
        scores.push_back(p.score);
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    std::tie(report.accuracy_low, report.accuracy_high) = wilson_interval(correct, n);
    report.auc = roc_auc(scores, fm.labels);

    for (long f = 0; f < fm.values.cols(); ++f) {
        std::vector<double> pos, neg;
        for (long i = 0; i < n; ++i)
            (fm.labels[static_cast<std::size_t>(i)] == 1 ? pos : neg).push_back(fm.values(i, f));
        report.mwu.emplace_back(fm.names[static_cast<std::size_t>(f)], mann_whitney_u(pos, neg));
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw SizeMismatch("scores and labels must align");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i)
        (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    if (pos.empty() || neg.empty()) throw SingleClass("ROC needs both classes");
    std::vector<double> pooled = pos;
    pooled.insert(pooled.end(), neg.begin(), neg.end());
    const std::vector<double> ranks = midranks(pooled);
    double rank_sum_pos = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) rank_sum_pos += ranks[i];
    const double m = static_cast<double>(pos.size());
    const double u = rank_sum_pos - m * (m + 1) / 2;
    return u / (m * static_cast<double>(neg.size()));
}

std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& scores,
                                                 const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw SizeMismatch("scores and labels must align");
    long total_pos = 0, total_neg = 0;
    for (int l : labels) l == 1 ? ++total_pos : ++total_neg;
    if (total_pos == 0 || total_neg == 0) throw SingleClass("ROC needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::pair<double, double>> curve = {{0.0, 0.0}};
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k)
            labels[order[k]] == 1 ? ++tp : ++fp;
        curve.emplace_back(static_cast<double>(fp) / total_neg, static_cast<double>(tp) / total_pos);
        i = j + 1;
    }
    return curve;
}

double snr_db(const Matrix& image, const BoolMask& signal_region, const BoolMask& noise_region) {
    if (signal_region.rows() != image.rows() || signal_region.cols() != image.cols() ||
        noise_region.rows() != image.rows() || noise_region.cols() != image.cols())
        throw SizeMismatch("region masks must match the image");
    double s_sum = 0, n_sum = 0;
    long s_count = 0, n_count = 0;
    for (long r = 0; r < image.rows(); ++r)
        for (long c = 0; c < image.cols(); ++c) {
            if (signal_region(r, c)) {
                s_sum += image(r, c);
                ++s_count;
            }
            if (noise_region(r, c)) {
                n_sum += image(r, c);
                ++n_count;
            }
        }
    if (s_count == 0 || n_count == 0) throw EmptyRegion("signal and noise regions must be nonempty");
    const double mu_s = s_sum / s_count;
    const double mu_n = n_sum / n_count;
    double var_n = 0;
    for (long r = 0; r < image.rows(); ++r)
        for (long c = 0; c < image.cols(); ++c)
            if (noise_region(r, c)) {
                const double d = image(r, c) - mu_n;
                var_n += d * d;
            }
    var_n /= n_count;
    if (var_n <= 0) throw ZeroNoiseStd("noise region has zero variance");
    const double diff = mu_s - mu_n;
    return 10 * std::log10(diff * diff / var_n);
}

TTest welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw EmptySample("each sample needs at least 2 values");
    auto moments = [](const std::vector<double>& v) {
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
        return std::pair{mean, var};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    TTest r;
    if (se2 <= 0) {
        r.t = ma == mb ? 0 : std::numeric_limits<double>::infinity();
        r.p_two_sided = ma == mb ? 1.0 : 0.0;
        return r;
    }
    r.t = (ma - mb) / std::sqrt(se2);
    r.dof = se2 * se2 / (va * va / (na * na * (na - 1)) + vb * vb / (nb * nb * (nb - 1)));
    r.p_two_sided = student_t_two_sided_p(r.t, r.dof);
    return r;
}

NoiseSweepReport noise_robustness_sweep(const ThermalSequence& seq, const RoiMask& roi,
                                        const std::vector<FactorMethod>& methods,
                                        const std::vector<double>& levels,
                                        const SweepOptions& opt) {
    seq.validate();
    roi.validate();
    if (!roi.reference_mask) throw MissingReference("sweep needs a reference (noise) region");
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
        if (levels[i] >= levels[i + 1])
            throw ConfigInvalid("noise levels must be strictly increasing");
    if (methods.empty() || levels.empty()) throw ConfigInvalid("empty sweep grid");

    double lo = seq.frames.front().minCoeff(), hi = seq.frames.front().maxCoeff();
    for (const auto& f : seq.frames) {
        lo = std::min(lo, f.minCoeff());
        hi = std::max(hi, f.maxCoeff());
    }
    const double range = hi - lo;

    // One unit-variance field shared by every level, so larger levels always
    // mean strictly more injected noise.
    Rng rng(derive_seed(opt.seed, "sweep-noise"));
    std::vector<Matrix> unit_noise;
    unit_noise.reserve(seq.frames.size());
    for (const auto& f : seq.frames) {
        Matrix g(f.rows(), f.cols());
        for (long r = 0; r < g.rows(); ++r)
            for (long c = 0; c < g.cols(); ++c) g(r, c) = rng.normal();
        unit_noise.push_back(std::move(g));
    }

    NoiseSweepReport report;
    report.levels = levels;
    report.methods = methods;
    report.input_snr.resize(levels.size());
    report.avatar_snr.resize(static_cast<long>(methods.size()), static_cast<long>(levels.size()));

    for (std::size_t li = 0; li < levels.size(); ++li) {
        const double scale = levels[li] / 100.0 * range;
        ThermalSequence noisy = seq;
        if (scale != 0)
            for (std::size_t t = 0; t < noisy.frames.size(); ++t)
                noisy.frames[t] += scale * unit_noise[t];

        Matrix mean_frame = Matrix::Zero(seq.frames.front().rows(), seq.frames.front().cols());
        for (const auto& f : noisy.frames) mean_frame += f;
        mean_frame /= static_cast<double>(noisy.frames.size());
        report.input_snr[li] = snr_db(mean_frame, roi.mask, *roi.reference_mask);

        const HeatMatrix x = stack_vectorize(noisy);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            IterOptions iter;
            iter.max_iters = opt.max_iters;
            iter.seed = derive_seed(opt.seed, "sweep/" + to_string(methods[mi]));
            Matrix bases;
            switch (methods[mi]) {
                case FactorMethod::Pct: bases = pct(x, opt.k).bases; break;
                case FactorMethod::Nmf: bases = nmf(x, opt.k, iter).bases; break;
                case FactorMethod::SparseNmf:
                    bases = sparse_nmf(x, opt.k, 0.1, iter).bases;
                    break;
                case FactorMethod::SemiNmf: bases = semi_nmf(x, opt.k, iter).bases; break;
                case FactorMethod::DeepSemiNmf: {
                    DeepOptions dopt;
                    dopt.pretrain_iters = opt.max_iters;
                    dopt.finetune_iters = opt.max_iters;
                    dopt.seed = iter.seed;
                    bases = effective_bases(deep_semi_nmf(x, opt.layer_sizes, dopt));
                    break;
                }
            }
            const Avatar avatar = embed(bases, x.m_rows, x.n_cols, methods[mi]);
            report.avatar_snr(static_cast<long>(mi), static_cast<long>(li)) =
                snr_db(avatar.image, roi.mask, *roi.reference_mask);
        }
    }
    return report;
}

void save_eval_report(const std::filesystem::path& dir, const EvalReport& report,
                      const std::vector<std::string>& comments) {
    std::filesystem::create_directories(dir);
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    {
        std::ofstream out(dir / "metrics.csv");
        if (!out) throw UnreadableFile("cannot write " + (dir / "metrics.csv").string());
        for (const auto& c : comments) out << "# " << c << "\n";
        out << "metric,value\n";
        out << "accuracy," << fmt(report.accuracy) << "\n";
        out << "accuracy_low," << fmt(report.accuracy_low) << "\n";
        out << "accuracy_high," << fmt(report.accuracy_high) << "\n";
        out << "auc," << fmt(report.auc) << "\n";
        out << "interval_rule,wilson95\n";
        out << "tp," << report.confusion.tp << "\n";
        out << "tn," << report.confusion.tn << "\n";
        out << "fp," << report.confusion.fp << "\n";
        out << "fn," << report.confusion.fn << "\n";
        for (const auto& [name, mwu] : report.mwu) {
            out << "mwu_u " << name << "," << fmt(mwu.u) << "\n";
            out << "mwu_p " << name << "," << fmt(mwu.p_two_sided) << "\n";
        }
    }
    {
        std::ofstream out(dir / "predictions.csv");
        if (!out) throw UnreadableFile("cannot write " + (dir / "predictions.csv").string());
        for (const auto& c : comments) out << "# " << c << "\n";
        out << "case_id,label,predicted,score\n";
        for (std::size_t i = 0; i < report.predictions.size(); ++i)
            out << report.case_ids[i] << "," << report.labels[i] << ","
                << report.predictions[i].label << "," << fmt(report.predictions[i].score) << "\n";
    }
    {
        std::vector<double> scores;
        for (const auto& p : report.predictions) scores.push_back(p.score);
        const auto curve = roc_curve(scores, report.labels);
        std::ofstream out(dir / "roc.csv");
        if (!out) throw UnreadableFile("cannot write " + (dir / "roc.csv").string());
        for (const auto& c : comments) out << "# " << c << "\n";
        out << "fpr,tpr\n";
        for (const auto& [fpr, tpr] : curve) out << fmt(fpr) << "," << fmt(tpr) << "\n";
    }
    {
        std::ofstream out(dir / "report.txt");
        if (!out) throw UnreadableFile("cannot write " + (dir / "report.txt").string());
        std::snprintf(buf, sizeof buf, "%.1f (%.1f-%.1f)", 100 * report.accuracy,
                      100 * report.accuracy_low, 100 * report.accuracy_high);
        out << "accuracy % (wilson 95): " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.4f", report.auc);
        out << "auc: " << buf << "\n";
        out << "confusion: tp=" << report.confusion.tp << " tn=" << report.confusion.tn
            << " fp=" << report.confusion.fp << " fn=" << report.confusion.fn << "\n";
        for (const auto& [name, mwu] : report.mwu) {
            std::snprintf(buf, sizeof buf, "U=%g p=%.3g", mwu.u, mwu.p_two_sided);
            out << "mwu [" << name << "]: " << buf << "\n";
        }
    }
}

void save_noise_sweep(const std::filesystem::path& file, const NoiseSweepReport& report,
                      const std::vector<std::string>& comments) {
    std::ofstream out(file);
    if (!out) throw UnreadableFile("cannot write " + file.string());
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& c : comments) out << "# " << c << "\n";
    out << "level_percent,input_snr_db";
    for (const auto m : report.methods) out << "," << to_string(m) << "_avatar_snr_db";
    out << "\n";
    for (std::size_t li = 0; li < report.levels.size(); ++li) {
        out << fmt(report.levels[li]) << "," << fmt(report.input_snr[li]);
        for (std::size_t mi = 0; mi < report.methods.size(); ++mi)
            out << ","
                << fmt(report.avatar_snr(static_cast<long>(mi), static_cast<long>(li)));
        out << "\n";
    }
}

} // namespace thermo
