#include "thermo/thermomics.hpp"

#include "thermo/errors.hpp"
#include "thermo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace thermo {

namespace {

const std::vector<std::string> kAngleNames = {"0", "π/4", "π/2", "3π/4", "π"};
const std::vector<double> kAngles = {0.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                     3 * std::numbers::pi / 4, std::numbers::pi};
const std::vector<std::string> kTlcmStatNames = {"Contrast",    "Dissimilarity", "Correlation",
                                                 "Energy",      "Homogeneity",   "ASM"};
const std::vector<std::string> kFilterImageNames = {
    "LOG-1-0",    "LOG-2-0",    "Gabor-0",    "Gabor-π/4",  "Gabor-π/2",
    "Gabor-3π/4", "Wavelet-LL", "Wavelet-LH", "Wavelet-HL", "Wavelet-HH"};
// Three extra percentiles on each filtered image except the last, which gets
// two; together with the 11 base stats per image this lands on 139.
const std::vector<std::string> kExtraPercentiles = {"interqu5", "interqu25", "interqu75"};

std::vector<std::string> build_manifest() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (const auto& s : first_order_names()) names.push_back("First order-" + s);
    for (int d = 1; d <= 5; ++d)
        for (const auto& ang : kAngleNames)
            for (const auto& stat : kTlcmStatNames)
                names.push_back(stat + " " + std::to_string(d) + "-" + ang);
    for (std::size_t img = 0; img < kFilterImageNames.size(); ++img) {
        for (const auto& s : first_order_names())
            names.push_back(kFilterImageNames[img] + "-firstorder-" + s);
        const std::size_t extras = img + 1 < kFilterImageNames.size() ? 3 : 2;
        for (std::size_t e = 0; e < extras; ++e)
            names.push_back(kFilterImageNames[img] + "-firstorder-" + kExtraPercentiles[e]);
    }
    return names;
}

} // namespace

const std::vector<std::string>& feature_manifest() {
    static const std::vector<std::string> manifest = build_manifest();
    return manifest;
}

std::string feature_manifest_text() {
    std::string text = "thermomics feature manifest v1\n";
    for (const auto& n : feature_manifest()) text += n + "\n";
    return text;
}

std::uint64_t feature_manifest_hash() { return fnv1a(feature_manifest_text()); }

const std::vector<std::string>& first_order_names() {
    static const std::vector<std::string> names = {"interqu10", "interqu90", "max",
                                                   "min",       "median",    "mean",
                                                   "IQR",       "Gray range", "MAD",
                                                   "std",       "skewness"};
    return names;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw TooFewPixels("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

std::vector<double> first_order_features(std::vector<double> pixels) {
    const std::size_t n = pixels.size();
    if (n < 2) throw TooFewPixels("need at least 2 pixels, got " + std::to_string(n));
    std::vector<double> sorted = pixels;
    std::sort(sorted.begin(), sorted.end());
    auto pct = [&](double q) {
        const double rank = q / 100.0 * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(rank));
        if (lo + 1 >= n) return sorted.back();
        const double frac = rank - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
    };
    double mean = 0;
    for (double v : pixels) mean += v;
    mean /= static_cast<double>(n);
    double mad = 0, m2 = 0, m3 = 0;
    for (double v : pixels) {
        const double d = v - mean;
        mad += std::abs(d);
        m2 += d * d;
        m3 += d * d * d;
    }
    mad /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    const double skew = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return {pct(10), pct(90), sorted.back(), sorted.front(), pct(50), mean,
            pct(75) - pct(25), sorted.back() - sorted.front(), mad, std::sqrt(m2), skew};
}

namespace {

// (row offset, col offset) for one step of the given distance and angle.
std::pair<int, int> tlcm_offset(int distance, double angle) {
    if (distance < 1 || distance > 5)
        throw BadOffset("distance must be in 1..5, got " + std::to_string(distance));
    for (std::size_t i = 0; i < kAngles.size(); ++i)
        if (std::abs(angle - kAngles[i]) < 1e-9) {
            switch (i) {
                case 0: return {0, distance};           // 0
                case 1: return {-distance, distance};   // pi/4
                case 2: return {-distance, 0};          // pi/2
                case 3: return {-distance, -distance};  // 3pi/4
                default: return {0, -distance};         // pi
            }
        }
    throw BadOffset("angle must be one of {0, π/4, π/2, 3π/4, π}");
}

} // namespace

Matrix tlcm(const Matrix& image, const BoolMask& roi, int distance, double angle, int levels) {
    if (levels < 2) throw ConfigInvalid("tlcm needs at least 2 levels");
    if (roi.rows() != image.rows() || roi.cols() != image.cols())
        throw SizeMismatch("ROI mask dimensions do not match the image");
    const auto [dr, dc] = tlcm_offset(distance, angle);

    double lo = 0, hi = 0;
    bool seen = false;
    for (long r = 0; r < image.rows(); ++r)
        for (long c = 0; c < image.cols(); ++c)
            if (roi(r, c)) {
                const double v = image(r, c);
                if (!seen) {
                    lo = hi = v;
                    seen = true;
                } else {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
    if (!seen) throw EmptyRegion("ROI has no pixels");
    const double range = hi - lo;
    auto quantize = [&](double v) {
        if (range <= 0) return 0;
        const int q = static_cast<int>((v - lo) / range * levels);
        return std::clamp(q, 0, levels - 1);
    };

    Matrix p = Matrix::Zero(levels, levels);
    double total = 0;
    for (long r = 0; r < image.rows(); ++r)
        for (long c = 0; c < image.cols(); ++c) {
            if (!roi(r, c)) continue;
            const long rr = r + dr, cc = c + dc;
            if (rr < 0 || rr >= image.rows() || cc < 0 || cc >= image.cols()) continue;
            if (!roi(rr, cc)) continue;
            const int a = quantize(image(r, c));
            const int b = quantize(image(rr, cc));
            p(a, b) += 1;
            p(b, a) += 1; // symmetric counting
            total += 2;
        }
    if (total == 0) throw NoValidPairs("no co-occurring ROI pixel pairs at this offset");
    return p / total;
}

TlcmStats tlcm_features(const Matrix& p) {
    if (std::abs(p.sum() - 1.0) > 1e-9)
        throw NotNormalized("co-occurrence matrix entries must sum to 1");
    const long n = p.rows();
    Vector px = p.rowwise().sum();
    Vector py = p.colwise().sum();
    double mu_x = 0, mu_y = 0;
    for (long i = 0; i < n; ++i) {
        mu_x += i * px[i];
        mu_y += i * py[i];
    }
    double var_x = 0, var_y = 0;
    for (long i = 0; i < n; ++i) {
        var_x += (i - mu_x) * (i - mu_x) * px[i];
        var_y += (i - mu_y) * (i - mu_y) * py[i];
    }
    TlcmStats s;
    double cross = 0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < p.cols(); ++j) {
            const double v = p(i, j);
            const double d = static_cast<double>(i - j);
            s.contrast += d * d * v;
            s.dissimilarity += std::abs(d) * v;
            s.angular_second_moment += v * v;
            s.homogeneity += v / (1.0 + d * d);
            cross += (i - mu_x) * (j - mu_y) * v;
        }
    s.energy = std::sqrt(s.angular_second_moment);
    const double denom = std::sqrt(var_x) * std::sqrt(var_y);
    s.correlation = denom > 1e-12 ? cross / denom : 1.0; // constant image convention
    return s;
}

namespace {

long reflect(long i, long n) { return i < 0 ? -1 - i : (i >= n ? 2 * n - 1 - i : i); }

Matrix convolve_symmetric(const Matrix& img, const Matrix& kernel) {
    const long radius = kernel.rows() / 2;
    Matrix out(img.rows(), img.cols());
    for (long r = 0; r < img.rows(); ++r)
        for (long c = 0; c < img.cols(); ++c) {
            double acc = 0;
            for (long kr = -radius; kr <= radius; ++kr)
                for (long kc = -radius; kc <= radius; ++kc)
                    acc += kernel(kr + radius, kc + radius) *
                           img(reflect(r + kr, img.rows()), reflect(c + kc, img.cols()));
            out(r, c) = acc;
        }
    return out;
}

// Sampled analytic LoG, shifted to an exactly zero-sum stencil so a constant
// image maps to (numerical) zero.
Matrix log_kernel(double sigma) {
    const long radius = static_cast<long>(std::ceil(3 * sigma));
    Matrix k(2 * radius + 1, 2 * radius + 1);
    const double s2 = sigma * sigma;
    for (long y = -radius; y <= radius; ++y)
        for (long x = -radius; x <= radius; ++x) {
            const double r2 = static_cast<double>(x * x + y * y);
            k(y + radius, x + radius) =
                (r2 / (2 * s2) - 1.0) * std::exp(-r2 / (2 * s2)) / (std::numbers::pi * s2 * s2);
        }
    k.array() -= k.mean();
    return k;
}

// Real part of a Gabor filter: wavelength 4 px, sigma 2 px, unit aspect.
Matrix gabor_kernel(double theta) {
    constexpr double lambda = 4.0, sigma = 2.0;
    const long radius = 6;
    Matrix k(2 * radius + 1, 2 * radius + 1);
    for (long y = -radius; y <= radius; ++y)
        for (long x = -radius; x <= radius; ++x) {
            const double xr = x * std::cos(theta) + y * std::sin(theta);
            const double yr = -x * std::sin(theta) + y * std::cos(theta);
            k(y + radius, x + radius) = std::exp(-(xr * xr + yr * yr) / (2 * sigma * sigma)) *
                                        std::cos(2 * std::numbers::pi * xr / lambda);
        }
    return k;
}

// One undecimated Haar level. First letter = vertical filter, second =
// horizontal (LH = lowpass down the rows, highpass across the columns).
void haar_subbands(const Matrix& img, Matrix& ll, Matrix& lh, Matrix& hl, Matrix& hh) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    const long rows = img.rows(), cols = img.cols();
    Matrix low_h(rows, cols), high_h(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            const double a = img(r, c);
            const double b = img(r, reflect(c + 1, cols));
            low_h(r, c) = (a + b) * inv_sqrt2;
            high_h(r, c) = (a - b) * inv_sqrt2;
        }
    ll.resize(rows, cols);
    lh.resize(rows, cols);
    hl.resize(rows, cols);
    hh.resize(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            const long r2 = reflect(r + 1, rows);
            ll(r, c) = (low_h(r, c) + low_h(r2, c)) * inv_sqrt2;
            lh(r, c) = (high_h(r, c) + high_h(r2, c)) * inv_sqrt2;
            hl(r, c) = (low_h(r, c) - low_h(r2, c)) * inv_sqrt2;
            hh(r, c) = (high_h(r, c) - high_h(r2, c)) * inv_sqrt2;
        }
}

} // namespace

std::vector<std::pair<std::string, Matrix>> filter_bank(const Matrix& image) {
    if (image.rows() < 8 || image.cols() < 8)
        throw ImageTooSmall("filter bank needs at least 8x8, got " +
                            std::to_string(image.rows()) + "x" + std::to_string(image.cols()));
    std::vector<std::pair<std::string, Matrix>> out;
    out.reserve(kFilterImageNames.size());
    out.emplace_back("LOG-1-0", convolve_symmetric(image, log_kernel(1.0)));
    out.emplace_back("LOG-2-0", convolve_symmetric(image, log_kernel(2.0)));
    for (std::size_t i = 0; i < 4; ++i)
        out.emplace_back("Gabor-" + kAngleNames[i],
                         convolve_symmetric(image, gabor_kernel(kAngles[i])));
    Matrix ll, lh, hl, hh;
    haar_subbands(image, ll, lh, hl, hh);
    out.emplace_back("Wavelet-LL", std::move(ll));
    out.emplace_back("Wavelet-LH", std::move(lh));
    out.emplace_back("Wavelet-HL", std::move(hl));
    out.emplace_back("Wavelet-HH", std::move(hh));
    return out;
}

namespace {

std::vector<double> roi_pixels(const Matrix& image, const BoolMask& roi) {
    std::vector<double> px;
    for (long r = 0; r < image.rows(); ++r)
        for (long c = 0; c < image.cols(); ++c)
            if (roi(r, c)) px.push_back(image(r, c));
    return px;
}

} // namespace

FeatureVector extract_thermomics(const Avatar& a, const RoiMask& roi) {
    roi.validate();
    if (roi.mask.rows() != a.image.rows() || roi.mask.cols() != a.image.cols())
        throw SizeMismatch("ROI mask dimensions do not match the avatar");
    if (!a.image.allFinite()) throw ShapeInconsistent("avatar image contains non-finite values");

    FeatureVector fv;
    fv.names = feature_manifest();
    fv.values.resize(kFeatureCount);
    long idx = 0;

    const std::vector<double> raw = roi_pixels(a.image, roi.mask);
    for (double v : first_order_features(raw)) fv.values[idx++] = v;

    for (int d = 1; d <= 5; ++d)
        for (double ang : kAngles) {
            const TlcmStats s = tlcm_features(tlcm(a.image, roi.mask, d, ang));
            fv.values[idx++] = s.contrast;
            fv.values[idx++] = s.dissimilarity;
            fv.values[idx++] = s.correlation;
            fv.values[idx++] = s.energy;
            fv.values[idx++] = s.homogeneity;
            fv.values[idx++] = s.angular_second_moment;
        }

    // Pixels outside the ROI are replaced by the ROI mean before filtering so
    // no feature can depend on them.
    double roi_mean = 0;
    for (double v : raw) roi_mean += v;
    roi_mean /= static_cast<double>(raw.size());
    Matrix masked = Matrix::Constant(a.image.rows(), a.image.cols(), roi_mean);
    for (long r = 0; r < a.image.rows(); ++r)
        for (long c = 0; c < a.image.cols(); ++c)
            if (roi.mask(r, c)) masked(r, c) = a.image(r, c);

    const auto filtered = filter_bank(masked);
    for (std::size_t img = 0; img < filtered.size(); ++img) {
        const std::vector<double> px = roi_pixels(filtered[img].second, roi.mask);
        for (double v : first_order_features(px)) fv.values[idx++] = v;
        const std::size_t extras = img + 1 < filtered.size() ? 3 : 2;
        const double qs[3] = {5, 25, 75};
        for (std::size_t e = 0; e < extras; ++e) fv.values[idx++] = percentile(px, qs[e]);
    }
    if (idx != kFeatureCount)
        throw ShapeInconsistent("feature count mismatch: " + std::to_string(idx));
    return fv;
}

FeatureMatrix extract_feature_matrix(const std::vector<Avatar>& avatars,
                                     const std::vector<RoiMask>& rois,
                                     const std::vector<std::string>& case_ids,
                                     const std::vector<int>& labels) {
    if (avatars.size() != rois.size() || avatars.size() != case_ids.size() ||
        avatars.size() != labels.size())
        throw SizeMismatch("avatars, ROIs, case ids and labels must align");
    FeatureMatrix fm;
    fm.names = feature_manifest();
    fm.values.resize(static_cast<long>(avatars.size()), kFeatureCount);
    fm.case_ids = case_ids;
    fm.labels = labels;
    for (std::size_t i = 0; i < avatars.size(); ++i)
        fm.values.row(static_cast<long>(i)) = extract_thermomics(avatars[i], rois[i]).values.transpose();
    return fm;
}

void save_feature_matrix(const std::filesystem::path& file, const FeatureMatrix& fm,
                         const std::vector<std::string>& comments) {
    std::ofstream out(file);
    if (!out) throw UnreadableFile("cannot write " + file.string());
    for (const auto& c : comments) out << "# " << c << "\n";
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(feature_manifest_hash()));
    out << "# manifest thermomics-v1 fnv1a:" << hash << "\n";
    for (const auto& n : fm.names) out << n << ",";
    out << "case_id,label\n";
    char buf[64];
    for (long r = 0; r < fm.values.rows(); ++r) {
        for (long c = 0; c < fm.values.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", fm.values(r, c));
            out << buf << ",";
        }
        out << fm.case_ids[static_cast<std::size_t>(r)] << ","
            << fm.labels[static_cast<std::size_t>(r)] << "\n";
    }
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw UnreadableFile("cannot read " + file.string());
    FeatureMatrix fm;
    std::string line;
    bool header_done = false;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!header_done) {
            if (cells.size() < 3 || cells[cells.size() - 2] != "case_id" || cells.back() != "label")
                throw UnreadableFile("feature CSV header must end in case_id,label");
            fm.names.assign(cells.begin(), cells.end() - 2);
            header_done = true;
            continue;
        }
        if (cells.size() != fm.names.size() + 2)
            throw ShapeInconsistent("feature CSV row has " + std::to_string(cells.size()) +
                                    " cells, expected " + std::to_string(fm.names.size() + 2));
        std::vector<double> vals;
        vals.reserve(fm.names.size());
        for (std::size_t i = 0; i < fm.names.size(); ++i) {
            try {
                vals.push_back(std::stod(cells[i]));
            } catch (const std::exception&) {
                throw UnreadableFile("bad numeric cell '" + cells[i] + "' in " + file.string());
            }
        }
        rows.push_back(std::move(vals));
        fm.case_ids.push_back(cells[cells.size() - 2]);
        try {
            fm.labels.push_back(std::stoi(cells.back()));
        } catch (const std::exception&) {
            throw UnreadableFile("bad label cell '" + cells.back() + "' in " + file.string());
        }
    }
    if (!header_done) throw UnreadableFile("feature CSV has no header row: " + file.string());
    fm.values.resize(static_cast<long>(rows.size()), static_cast<long>(fm.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            fm.values(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
    return fm;
}

} // namespace thermo
