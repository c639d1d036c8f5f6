#include "thermo/thermomics.hpp"

#include "thermo/errors.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace thermo;

namespace {

RoiMask make_roi(long rows, long cols, double radius) {
    RoiMask roi;
    roi.mask = BoolMask::Constant(rows, cols, false);
    BoolMask ref = BoolMask::Constant(rows, cols, false);
    const double cr = (rows - 1) / 2.0, cc = (cols - 1) / 2.0;
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c)
            if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius)
                roi.mask(r, c) = true;
    for (long c = 0; c < cols; ++c)
        if (!roi.mask(0, c)) ref(0, c) = true;
    roi.reference_mask = ref;
    return roi;
}

Avatar make_avatar(const Matrix& image) {
    Avatar a;
    a.image = image;
    a.source_method = FactorMethod::Pct;
    return a;
}

// Straight-line re-derivation of the first order stats used as an oracle.
std::vector<double> first_order_oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    auto pct = [&](double q) {
        const double rank = q / 100.0 * (n - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
        if (lo + 1 >= v.size()) return v.back();
        return v[lo] + (rank - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
    };
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double mad = 0, m2 = 0, m3 = 0;
    for (double x : v) {
        mad += std::abs(x - mean);
        m2 += (x - mean) * (x - mean);
        m3 += (x - mean) * (x - mean) * (x - mean);
    }
    mad /= n;
    m2 /= n;
    m3 /= n;
    return {pct(10),
            pct(90),
            v.back(),
            v.front(),
            pct(50),
            mean,
            pct(75) - pct(25),
            v.back() - v.front(),
            mad,
            std::sqrt(m2),
            m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0};
}

} // namespace

TEST_SUITE("thermomics") {

TEST_CASE("manifest holds 300 unique names in the documented blocks") {
    const auto& names = feature_manifest();
    REQUIRE(names.size() == 300);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == 300);

    int first_order = 0, tlcm_block = 0, filter_block = 0;
    for (const auto& n : names) {
        if (n.rfind("First order-", 0) == 0)
            ++first_order;
        else if (n.find("-firstorder-") != std::string::npos)
            ++filter_block;
        else
            ++tlcm_block;
    }
    CHECK(first_order == 11);
    CHECK(tlcm_block == 150);
    CHECK(filter_block == 139);
}

TEST_CASE("manifest spot checks") {
    const auto& names = feature_manifest();
    auto has = [&](const std::string& n) {
        return std::find(names.begin(), names.end(), n) != names.end();
    };
    CHECK(names[0] == "First order-interqu10");
    CHECK(names[5] == "First order-mean");
    CHECK(names[11] == "Contrast 1-0");
    CHECK(has("ASM 5-π"));
    CHECK(has("Correlation 3-π/2"));
    CHECK(has("Homogeneity 2-3π/4"));
    CHECK(has("LOG-1-0-firstorder-interqu5"));
    CHECK(has("Gabor-π/2-firstorder-skewness"));
    CHECK(has("Wavelet-HH-firstorder-interqu25"));
    // The last filtered image drops its 75th percentile to land on 139.
    CHECK(!has("Wavelet-HH-firstorder-interqu75"));
    CHECK(has("Wavelet-HL-firstorder-interqu75"));
}

TEST_CASE("manifest text and hash are frozen") {
    const std::string text = feature_manifest_text();
    CHECK(text.rfind("thermomics feature manifest v1\n", 0) == 0);
    CHECK(feature_manifest_hash() == 0xc051112093e44319ull);
}

TEST_CASE("shipped manifest file matches the built-in table") {
    const std::filesystem::path file =
        std::filesystem::path(THERMO_SOURCE_DIR) / "data" / "feature_manifest_v1.txt";
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == feature_manifest_text());
}

TEST_CASE("first order stats on a tiny hand-computed sample") {
    const auto f = first_order_features({1, 2, 3, 4, 5});
    REQUIRE(f.size() == 11);
    CHECK(f[0] == doctest::Approx(1.4).epsilon(1e-12));  // p10
    CHECK(f[1] == doctest::Approx(4.6).epsilon(1e-12));  // p90
    CHECK(f[2] == 5.0);                                  // max
    CHECK(f[3] == 1.0);                                  // min
    CHECK(f[4] == 3.0);                                  // median
    CHECK(f[5] == 3.0);                                  // mean
    CHECK(f[6] == 2.0);                                  // IQR
    CHECK(f[7] == 4.0);                                  // range
    CHECK(f[8] == doctest::Approx(1.2).epsilon(1e-12));  // MAD
    CHECK(f[9] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(f[10] == 0.0);                                 // symmetric, no skew
}

TEST_CASE("first order stats agree with a brute force oracle") {
    std::mt19937_64 rng(411);
    std::uniform_real_distribution<double> u(-5, 40);
    std::vector<double> px(101);
    for (auto& v : px) v = u(rng);
    const auto got = first_order_features(px);
    const auto want = first_order_oracle(px);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("first order stats refuse a single pixel") {
    CHECK_THROWS_AS(first_order_features({1.0}), TooFewPixels);
    CHECK_THROWS_AS(first_order_features({}), TooFewPixels);
    CHECK_THROWS_AS(percentile({}, 50), TooFewPixels);
}

TEST_CASE("percentile interpolates between closest ranks") {
    CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(percentile({1, 2, 3, 4}, 0) == 1.0);
    CHECK(percentile({1, 2, 3, 4}, 100) == 4.0);
    CHECK(percentile({7}, 30) == 7.0);
}

TEST_CASE("co-occurrence of a constant region is a point mass") {
    Matrix img = Matrix::Constant(4, 4, 7.0);
    BoolMask roi = BoolMask::Constant(4, 4, true);
    const Matrix p = tlcm(img, roi, 1, 0.0, 8);
    REQUIRE(p.rows() == 8);
    CHECK(p(0, 0) == 1.0);
    CHECK(p.sum() == doctest::Approx(1.0));

    const TlcmStats s = tlcm_features(p);
    CHECK(s.contrast == 0.0);
    CHECK(s.dissimilarity == 0.0);
    CHECK(s.angular_second_moment == 1.0);
    CHECK(s.energy == 1.0);
    CHECK(s.homogeneity == 1.0);
    CHECK(s.correlation == 1.0); // convention for a degenerate marginal
}

TEST_CASE("checkerboard co-occurrence is hand computable") {
    Matrix img(2, 2);
    img << 0, 1, 1, 0;
    BoolMask roi = BoolMask::Constant(2, 2, true);
    const Matrix p = tlcm(img, roi, 1, 0.0, 2);
    // Two horizontal pairs, each counted both ways: all mass off-diagonal.
    CHECK(p(0, 0) == 0.0);
    CHECK(p(0, 1) == 0.5);
    CHECK(p(1, 0) == 0.5);
    CHECK(p(1, 1) == 0.0);

    const TlcmStats s = tlcm_features(p);
    CHECK(s.contrast == 1.0);
    CHECK(s.dissimilarity == 1.0);
    CHECK(s.angular_second_moment == 0.5);
    CHECK(s.energy == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(s.homogeneity == 0.5);
    CHECK(s.correlation == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("opposite angles give the same symmetric matrix") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(20, 40);
    Matrix img(9, 9);
    for (long r = 0; r < 9; ++r)
        for (long c = 0; c < 9; ++c) img(r, c) = u(rng);
    const RoiMask roi = make_roi(9, 9, 3.4);
    for (int d = 1; d <= 3; ++d) {
        const Matrix a = tlcm(img, roi.mask, d, 0.0);
        const Matrix b = tlcm(img, roi.mask, d, std::numbers::pi);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("co-occurrence rejects bad offsets and degenerate regions") {
    Matrix img = Matrix::Constant(4, 4, 1.0);
    BoolMask all = BoolMask::Constant(4, 4, true);
    CHECK_THROWS_AS(tlcm(img, all, 0, 0.0), BadOffset);
    CHECK_THROWS_AS(tlcm(img, all, 6, 0.0), BadOffset);
    CHECK_THROWS_AS(tlcm(img, all, 1, 0.3), BadOffset);
    CHECK_THROWS_AS(tlcm(img, BoolMask::Constant(4, 4, false), 1, 0.0), EmptyRegion);
    CHECK_THROWS_AS(tlcm(img, BoolMask::Constant(3, 4, true), 1, 0.0), SizeMismatch);
    CHECK_THROWS_AS(tlcm(img, all, 1, 0.0, 1), ConfigInvalid);

    // Two isolated corner pixels can never co-occur at distance 1.
    BoolMask corners = BoolMask::Constant(4, 4, false);
    corners(0, 0) = corners(3, 3) = true;
    CHECK_THROWS_AS(tlcm(img, corners, 1, 0.0), NoValidPairs);
}

TEST_CASE("stats require a normalized matrix") {
    Matrix p(2, 2);
    p << 0, 1, 1, 0; // sums to 2
    CHECK_THROWS_AS(tlcm_features(p), NotNormalized);
}

TEST_CASE("filter bank names and response to a constant image") {
    const Matrix img = Matrix::Constant(8, 8, 3.0);
    const auto bank = filter_bank(img);
    REQUIRE(bank.size() == 10);
    const char* expected[] = {"LOG-1-0",    "LOG-2-0",    "Gabor-0",    "Gabor-π/4",
                              "Gabor-π/2",  "Gabor-3π/4", "Wavelet-LL", "Wavelet-LH",
                              "Wavelet-HL", "Wavelet-HH"};
    for (std::size_t i = 0; i < bank.size(); ++i) {
        CHECK(bank[i].first == expected[i]);
        CHECK(bank[i].second.rows() == 8);
        CHECK(bank[i].second.cols() == 8);
        CHECK(bank[i].second.allFinite());
    }
    // Zero-sum LoG stencils kill constants.
    CHECK(bank[0].second.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(bank[1].second.cwiseAbs().maxCoeff() < 1e-9);
    // Haar difference bands vanish identically, the smooth band scales by 2.
    CHECK(bank[7].second.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bank[8].second.cwiseAbs().maxCoeff() == 0.0);
    CHECK(bank[9].second.cwiseAbs().maxCoeff() == 0.0);
    CHECK((bank[6].second.array() - 6.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("impulse response of the LoG channel samples the analytic kernel") {
    Matrix img = Matrix::Zero(9, 9);
    img(4, 4) = 1.0;
    const Matrix out = filter_bank(img)[0].second; // sigma 1, radius 3

    const double s2 = 1.0;
    Matrix k(7, 7);
    for (long y = -3; y <= 3; ++y)
        for (long x = -3; x <= 3; ++x) {
            const double r2 = static_cast<double>(x * x + y * y);
            k(y + 3, x + 3) = (r2 / (2 * s2) - 1.0) * std::exp(-r2 / (2 * s2)) /
                              (std::numbers::pi * s2 * s2);
        }
    k.array() -= k.mean();
    // Correlation with a centered impulse reads the kernel back out
    // (the kernel is radially symmetric, so flipping does not matter).
    for (long r = 1; r <= 7; ++r)
        for (long c = 1; c <= 7; ++c)
            CHECK(std::abs(out(r, c) - k(r - 1, c - 1)) < 1e-12);
}

TEST_CASE("filter bank rejects tiny images") {
    CHECK_THROWS_AS(filter_bank(Matrix::Zero(7, 8)), ImageTooSmall);
    CHECK_THROWS_AS(filter_bank(Matrix::Zero(8, 7)), ImageTooSmall);
}

TEST_CASE("extraction returns 300 deterministic values") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> u(25, 38);
    Matrix img(16, 16);
    for (long r = 0; r < 16; ++r)
        for (long c = 0; c < 16; ++c) img(r, c) = u(rng);
    const RoiMask roi = make_roi(16, 16, 6.0);
    const Avatar a = make_avatar(img);

    const FeatureVector fv = extract_thermomics(a, roi);
    REQUIRE(fv.values.size() == 300);
    CHECK(fv.names == feature_manifest());
    CHECK(fv.values.allFinite());

    const FeatureVector again = extract_thermomics(a, roi);
    CHECK((fv.values - again.values).cwiseAbs().maxCoeff() == 0.0);

    // The leading block is exactly the first order stats of the ROI pixels.
    std::vector<double> px;
    for (long r = 0; r < 16; ++r)
        for (long c = 0; c < 16; ++c)
            if (roi.mask(r, c)) px.push_back(img(r, c));
    const auto fo = first_order_features(px);
    for (std::size_t i = 0; i < fo.size(); ++i) CHECK(fv.values[static_cast<long>(i)] == fo[i]);
}

TEST_CASE("features ignore everything outside the region of interest") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(25, 38);
    Matrix img(16, 16);
    for (long r = 0; r < 16; ++r)
        for (long c = 0; c < 16; ++c) img(r, c) = u(rng);
    const RoiMask roi = make_roi(16, 16, 6.0);
    const FeatureVector base = extract_thermomics(make_avatar(img), roi);

    Matrix vandalized = img;
    for (long r = 0; r < 16; ++r)
        for (long c = 0; c < 16; ++c)
            if (!roi.mask(r, c)) vandalized(r, c) += 100.0 + u(rng);
    const FeatureVector same = extract_thermomics(make_avatar(vandalized), roi);
    CHECK((base.values - same.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("extraction failure modes") {
    // Wide enough for every co-occurrence offset, below the filter bank minimum.
    Matrix small(6, 6);
    for (long r = 0; r < 6; ++r)
        for (long c = 0; c < 6; ++c) small(r, c) = static_cast<double>(r * 6 + c);
    RoiMask roi6;
    roi6.mask = BoolMask::Constant(6, 6, true);
    CHECK_THROWS_AS(extract_thermomics(make_avatar(small), roi6), ImageTooSmall);

    // One-pixel region cannot produce order statistics.
    RoiMask lone;
    lone.mask = BoolMask::Constant(9, 9, false);
    lone.mask(4, 4) = true;
    CHECK_THROWS_AS(extract_thermomics(make_avatar(Matrix::Zero(9, 9)), lone), TooFewPixels);

    // Non finite avatars are refused up front.
    Matrix nan_img = Matrix::Zero(16, 16);
    nan_img(3, 3) = std::nan("");
    CHECK_THROWS_AS(extract_thermomics(make_avatar(nan_img), make_roi(16, 16, 6.0)), DataError);

    // Mask size must match the avatar.
    CHECK_THROWS_AS(extract_thermomics(make_avatar(Matrix::Zero(16, 16)), make_roi(12, 12, 5.0)),
                    SizeMismatch);
}

TEST_CASE("feature matrix round-trips through csv") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(-3, 3);
    FeatureMatrix fm;
    fm.names = feature_manifest();
    fm.values.resize(3, kFeatureCount);
    for (long r = 0; r < 3; ++r)
        for (long c = 0; c < kFeatureCount; ++c) fm.values(r, c) = u(rng);
    fm.case_ids = {"case000", "case001", "case002"};
    fm.labels = {0, 1, 0};

    const auto dir = std::filesystem::temp_directory_path() / "thermo_feat_csv";
    std::filesystem::create_directories(dir);
    const auto file = dir / "features.csv";
    save_feature_matrix(file, fm, {"seed 5"});

    const FeatureMatrix back = load_feature_matrix(file);
    REQUIRE(back.values.rows() == 3);
    REQUIRE(back.values.cols() == kFeatureCount);
    CHECK((back.values - fm.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.case_ids == fm.case_ids);
    CHECK(back.labels == fm.labels);
    CHECK(back.names == fm.names);

    // The header carries the frozen manifest hash.
    std::ifstream in(file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("# manifest thermomics-v1 fnv1a:c051112093e44319") != std::string::npos);
    CHECK(text.find("# seed 5") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("batch extraction checks alignment") {
    CHECK_THROWS_AS(extract_feature_matrix({}, {}, {"x"}, {}), SizeMismatch);
}

} // TEST_SUITE
