#include "thermo/hsic.hpp"

#include "thermo/errors.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

using namespace thermo;

namespace {

FeatureMatrix make_fm(const Matrix& values, const std::vector<int>& labels) {
    FeatureMatrix fm;
    fm.values = values;
    fm.labels = labels;
    for (long k = 0; k < values.cols(); ++k) fm.names.push_back("f" + std::to_string(k));
    for (long i = 0; i < values.rows(); ++i) fm.case_ids.push_back("c" + std::to_string(i));
    return fm;
}

// n cases, d columns: column 0 tracks the label, column 1 duplicates it,
// the rest are seeded noise.
FeatureMatrix labeled_noise(long n, long d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    std::vector<int> labels(static_cast<std::size_t>(n));
    Matrix v(n, d);
    for (long i = 0; i < n; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
        v(i, 0) = labels[static_cast<std::size_t>(i)] * 3.0 + 0.01 * g(rng);
        for (long k = 1; k < d; ++k) v(i, k) = g(rng);
    }
    if (d > 1) v.col(1) = v.col(0);
    return make_fm(v, labels);
}

} // namespace

TEST_SUITE("hsic") {

TEST_CASE("rbf gram basics") {
    const auto g = rbf_gram({0.0, std::sqrt(2.0)}, 1.0);
    CHECK(g.data(0, 0) == 1.0);
    CHECK(g.data(1, 1) == 1.0);
    CHECK(g.data(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(g.data(1, 0) == g.data(0, 1));
    CHECK(!g.normalized);

    CHECK_THROWS_AS(rbf_gram({0, 1}, 0.0), NonPositiveBandwidth);
    CHECK_THROWS_AS(rbf_gram({0, 1}, -2.0), NonPositiveBandwidth);
    CHECK_THROWS_AS(rbf_gram({1.0}, 1.0), BlockTooSmall);
}

TEST_CASE("center_normalize yields unit Frobenius norm and zero row sums") {
    const auto g = rbf_gram({0.0, 0.7, 1.9, 4.2, 5.0}, 1.3);
    const auto nb = center_normalize(g);
    CHECK(nb.normalized);
    CHECK(nb.data.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (long r = 0; r < nb.data.rows(); ++r)
        CHECK(std::abs(nb.data.row(r).sum()) < 1e-12);
    for (long c = 0; c < nb.data.cols(); ++c)
        CHECK(std::abs(nb.data.col(c).sum()) < 1e-12);
}

TEST_CASE("center_normalize refuses constant kernels") {
    GramMatrix ones;
    ones.data = Matrix::Constant(4, 4, 1.0);
    CHECK_THROWS_AS(center_normalize(ones), DegenerateKernel);

    GramMatrix rect;
    rect.data = Matrix::Ones(3, 4);
    CHECK_THROWS_AS(center_normalize(rect), SizeMismatch);
}

TEST_CASE("hsic_v of a kernel with itself is one") {
    const auto nb = center_normalize(rbf_gram({0.1, 1.4, 2.0, 3.3, 7.1, 9.0}, 2.0));
    CHECK(hsic_v(nb, nb) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hsic_v matches the trace form") {
    const auto a = center_normalize(rbf_gram({0.0, 1.0, 2.5, 4.0, 4.5}, 1.0));
    const auto b = center_normalize(rbf_gram({3.0, 1.0, 0.5, 2.0, 9.0}, 2.0));
    const double via_elems = hsic_v(a, b);
    const double via_trace = (a.data * b.data).trace();
    CHECK(std::abs(via_elems - via_trace) < 1e-12);
    // Cauchy-Schwarz on unit-norm matrices.
    CHECK(via_elems <= 1.0 + 1e-12);
    CHECK(via_elems >= -1.0 - 1e-12);
}

TEST_CASE("hsic_v rejects raw or mismatched Grams") {
    const auto a = center_normalize(rbf_gram({0, 1, 2}, 1.0));
    const auto b = center_normalize(rbf_gram({0, 1, 2, 3}, 1.0));
    CHECK_THROWS_AS(hsic_v(a, b), SizeMismatch);
    CHECK_THROWS_AS(hsic_v(a, rbf_gram({0, 1, 2}, 1.0)), NotNormalized);
}

TEST_CASE("median bandwidth") {
    CHECK(median_bandwidth({0, 1, 2}) == 1.0);
    CHECK(median_bandwidth({5, 5, 5, 5}) == 1.0); // all distances vanish
    CHECK(median_bandwidth({2.0}) == 1.0);
    CHECK(median_bandwidth({0, 2}) == 2.0);
}

TEST_CASE("single-block estimator equals the V-statistic") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 8 + static_cast<int>(rng() % 17);
        std::vector<double> x(static_cast<std::size_t>(n)), y(static_cast<std::size_t>(n));
        for (auto& v : x) v = g(rng);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = g(rng) + 0.5 * x[i];
        const double blocked =
            block_hsic(x, y, n, LabelKernel::Rbf, 1234 + static_cast<std::uint64_t>(trial));
        const double plain = hsic_v(center_normalize(rbf_gram(x, median_bandwidth(x))),
                                    center_normalize(rbf_gram(y, median_bandwidth(y))));
        CHECK(std::abs(blocked - plain) < 1e-14);
    }
}

TEST_CASE("blocked estimator is near zero for independent data") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0, 1);
    std::vector<double> x(200), y(200);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng);
    const double est = block_hsic(x, y, 20, LabelKernel::Rbf, 99);
    CHECK(std::abs(est) < 0.1);
}

TEST_CASE("blocked estimator saturates at one for a label-valued feature") {
    std::vector<double> feature(60);
    std::mt19937_64 rng(42);
    for (std::size_t i = 0; i < 60; ++i) feature[i] = static_cast<double>(i % 2);
    std::shuffle(feature.begin(), feature.end(), rng);
    const std::vector<double> labels = feature; // feature carries the label exactly
    const double est = block_hsic(feature, labels, 20, LabelKernel::Delta, 5);
    CHECK(est == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("blocked estimator validates inputs") {
    std::vector<double> x{0, 1, 2, 3}, y{0, 1, 0, 1};
    CHECK_THROWS_AS(block_hsic(x, {0, 1}, 2, LabelKernel::Rbf, 1), SizeMismatch);
    CHECK_THROWS_AS(block_hsic(x, y, 1, LabelKernel::Rbf, 1), BlockTooSmall);
    CHECK_THROWS_AS(block_hsic(x, y, 5, LabelKernel::Rbf, 1), BlockTooSmall);
    std::vector<double> flat{3, 3, 3, 3};
    CHECK_THROWS_AS(block_hsic(flat, y, 4, LabelKernel::Rbf, 1), DegenerateKernel);
}

TEST_CASE("lasso keeps one copy of a duplicated feature") {
    const FeatureMatrix fm = labeled_noise(30, 5, 1111);
    const SelectionResult r = block_hsic_lasso(fm, 10, 0.01, LabelKernel::Delta, 7);
    REQUIRE(r.weights.size() == 5);
    CHECK(r.weights.minCoeff() >= 0.0);
    const int kept_copies = (r.weights[0] > 1e-6 ? 1 : 0) + (r.weights[1] > 1e-6 ? 1 : 0);
    CHECK(kept_copies <= 1);
    CHECK(r.weights[0] + r.weights[1] > 1e-6); // the informative signal survives
}

TEST_CASE("lasso with lambda above the stationarity bound returns all zeros") {
    const FeatureMatrix fm = labeled_noise(30, 4, 22);
    std::vector<double> labels(fm.labels.begin(), fm.labels.end());
    double bound = 0;
    for (long k = 0; k < fm.values.cols(); ++k) {
        std::vector<double> col(static_cast<std::size_t>(fm.values.rows()));
        for (long i = 0; i < fm.values.rows(); ++i)
            col[static_cast<std::size_t>(i)] = fm.values(i, k);
        bound = std::max(bound, block_hsic(col, labels, 10, LabelKernel::Delta, 7));
    }
    const SelectionResult r =
        block_hsic_lasso(fm, 10, bound * (1 + 1e-9) + 1e-12, LabelKernel::Delta, 7);
    CHECK(r.weights.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.ranked.empty());
}

TEST_CASE("top ranked score is exactly one") {
    const FeatureMatrix fm = labeled_noise(30, 5, 3);
    const SelectionResult r = block_hsic_lasso(fm, 10, 0.005, LabelKernel::Delta, 7);
    REQUIRE(!r.ranked.empty());
    CHECK(r.ranked.front().score == 1.0);
    for (std::size_t i = 1; i < r.ranked.size(); ++i) {
        CHECK(r.ranked[i].weight <= r.ranked[i - 1].weight);
        CHECK(r.ranked[i].score <= 1.0);
        CHECK(r.ranked[i].score > 0.0);
    }
}

TEST_CASE("coordinate descent objective never increases") {
    const FeatureMatrix fm = labeled_noise(40, 8, 314);
    const SelectionResult r = block_hsic_lasso(fm, 10, 0.003, LabelKernel::Delta, 11);
    REQUIRE(r.objective_trace.size() >= 2);
    CHECK(r.objective_trace.front() == 0.0); // starts from w = 0
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        const double slack = 1e-12 * std::max(1.0, std::abs(r.objective_trace[i - 1]));
        CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + slack);
    }
}

TEST_CASE("lasso rejects bad parameters") {
    const FeatureMatrix fm = labeled_noise(30, 3, 5);
    CHECK_THROWS_AS(block_hsic_lasso(fm, 10, -0.1, LabelKernel::Delta, 1), NegativeLambda);
    CHECK_THROWS_AS(block_hsic_lasso(fm, 1, 0.1, LabelKernel::Delta, 1), BlockTooSmall);
    CHECK_THROWS_AS(block_hsic_lasso(fm, 31, 0.1, LabelKernel::Delta, 1), BlockTooSmall);

    FeatureMatrix single = labeled_noise(1, 3, 5);
    CHECK_THROWS_AS(block_hsic_lasso(single, 2, 0.1, LabelKernel::Delta, 1), TooFewCases);
}

TEST_CASE("constant features are dropped, all-constant input is an error") {
    Matrix v(20, 3);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0, 1);
    std::vector<int> labels(20);
    for (long i = 0; i < 20; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
        v(i, 0) = 4.0; // constant, must be dropped
        v(i, 1) = labels[static_cast<std::size_t>(i)] + 0.01 * g(rng);
        v(i, 2) = g(rng);
    }
    const FeatureMatrix fm = make_fm(v, labels);
    const SelectionResult r = block_hsic_lasso(fm, 10, 0.01, LabelKernel::Delta, 3);
    CHECK(r.weights[0] == 0.0);
    CHECK(r.weights[1] > 0.0);

    Matrix flat = Matrix::Constant(20, 2, 1.0);
    CHECK_THROWS_AS(block_hsic_lasso(make_fm(flat, labels), 10, 0.01, LabelKernel::Delta, 3),
                    AllFeaturesDegenerate);
}

TEST_CASE("automatic lambda keeps at most top_k features") {
    const FeatureMatrix fm = labeled_noise(40, 10, 606);
    const SelectionResult r = block_hsic_lasso_auto(fm, 10, 3, LabelKernel::Delta, 17);
    long nonzero = 0;
    for (long k = 0; k < r.weights.size(); ++k)
        if (r.weights[k] > 0) ++nonzero;
    CHECK(nonzero <= 3);
    CHECK(nonzero >= 1);
    CHECK(r.lambda > 0.0);
    CHECK_THROWS_AS(block_hsic_lasso_auto(fm, 10, 0, LabelKernel::Delta, 1), ConfigInvalid);
}

TEST_CASE("select_top_k slices the ranked list") {
    SelectionResult r;
    for (int i = 0; i < 5; ++i) {
        SelectionEntry e;
        e.name = "f" + std::to_string(i);
        e.weight = 5.0 - i;
        e.score = (5.0 - i) / 5.0;
        r.ranked.push_back(e);
    }
    CHECK(select_top_k(r, 3).size() == 3);
    CHECK(select_top_k(r, 3).front().name == "f0");
    CHECK(select_top_k(r, 99).size() == 5);
    CHECK(select_top_k(r, 0).empty());
}

TEST_CASE("selection round-trips through csv") {
    const FeatureMatrix fm = labeled_noise(30, 5, 99);
    const SelectionResult r = block_hsic_lasso(fm, 10, 0.005, LabelKernel::Delta, 21);
    REQUIRE(!r.ranked.empty());

    const auto dir = std::filesystem::temp_directory_path() / "thermo_sel_csv";
    std::filesystem::create_directories(dir);
    const auto file = dir / "selection.csv";
    save_selection(file, r, {"seed 21"});
    const SelectionResult back = load_selection(file, fm.names);

    REQUIRE(back.ranked.size() == r.ranked.size());
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
        CHECK(back.ranked[i].name == r.ranked[i].name);
        CHECK(back.ranked[i].weight == r.ranked[i].weight);
        CHECK(back.ranked[i].score == r.ranked[i].score);
    }
    CHECK((back.weights - r.weights).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.lambda == r.lambda);
    CHECK(back.delta == r.delta);
    CHECK(back.seed == r.seed);
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
