#include "thermo/embedding.hpp"

#include "thermo/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace thermo {

double sparsity(const Matrix& q, double zero_eps) {
    if (q.size() == 0) throw EmptyMatrix("sparsity of an empty matrix is undefined");
    const auto zeros = (q.array().abs() <= zero_eps).count();
    return static_cast<double>(zeros) / static_cast<double>(q.size());
}

Matrix memberships(const Matrix& bases) {
    if (bases.size() == 0) throw EmptyMatrix("cannot embed an empty basis matrix");
    const double mu = bases.mean();
    const long n = bases.rows();
    Matrix eta(bases.rows(), bases.cols());
    for (long i = 0; i < bases.cols(); ++i) {
        const double col_mean = bases.col(i).mean();
        double var = 0.0;
        for (long r = 0; r < n; ++r) {
            const double d = bases(r, i) - col_mean;
            var += d * d;
        }
        const double sigma = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
        if (sigma < 1e-12) {
            eta.col(i).setOnes();
        } else {
            // Saturate the exponent so near-constant columns whose mean sits
            // far from the grand mean cannot push the avatar out of double
            // range. Untouched whenever |arg| <= 100.
            eta.col(i) = ((bases.col(i).array() - mu) / sigma).min(100.0).max(-100.0).exp();
        }
    }
    return eta;
}

Avatar embed(const Matrix& bases, int m_rows, int n_cols, FactorMethod source_method) {
    if (bases.size() == 0) throw EmptyMatrix("cannot embed an empty basis matrix");
    if (bases.rows() != static_cast<long>(m_rows) * n_cols)
        throw ShapeInconsistent("basis rows " + std::to_string(bases.rows()) +
                                " do not match " + std::to_string(m_rows) + "x" +
                                std::to_string(n_cols));
    const Matrix eta = memberships(bases);
    Vector phi = Vector::Zero(bases.rows());
    for (long i = 0; i < bases.cols(); ++i)
        phi.array() += bases.col(i).array() * eta.col(i).array();

    Avatar a;
    a.source_method = source_method;
    a.image.resize(m_rows, n_cols);
    for (int r = 0; r < m_rows; ++r)
        for (int c = 0; c < n_cols; ++c) a.image(r, c) = phi[static_cast<long>(r) * n_cols + c];
    return a;
}

Avatar normalize_by_reference(const Avatar& a, const RoiMask& roi) {
    if (!roi.reference_mask || !roi.reference_mask->any())
        throw MissingReference("reference region absent or empty");
    const auto& ref = *roi.reference_mask;
    if (ref.rows() != a.image.rows() || ref.cols() != a.image.cols())
        throw SizeMismatch("reference mask dimensions do not match the avatar");

    double sum = 0.0;
    long count = 0;
    for (long r = 0; r < ref.rows(); ++r)
        for (long c = 0; c < ref.cols(); ++c)
            if (ref(r, c)) {
                sum += a.image(r, c);
                ++count;
            }
    const double mean = sum / count;
    double var = 0.0;
    for (long r = 0; r < ref.rows(); ++r)
        for (long c = 0; c < ref.cols(); ++c)
            if (ref(r, c)) {
                const double d = a.image(r, c) - mean;
                var += d * d;
            }
    const double sd = std::sqrt(var / count); // population convention

    Avatar out;
    out.source_method = a.source_method;
    out.image = (a.image.array() - mean) / (sd + 1e-12);
    out.normalization.applied = true;
    out.normalization.reference_mean = mean;
    out.normalization.reference_std = sd;
    return out;
}

void save_avatar(const std::filesystem::path& dir, const Avatar& a,
                 const std::vector<std::string>& comments) {
    std::filesystem::create_directories(dir);
    write_csv_matrix(dir / "avatar.csv", a.image, comments);

    // Preview only; the CSV carries the data.
    const double lo = a.image.minCoeff();
    const double hi = a.image.maxCoeff();
    Matrix scaled;
    if (hi - lo > 0)
        scaled = (a.image.array() - lo) / (hi - lo);
    else
        scaled = Matrix::Zero(a.image.rows(), a.image.cols());
    write_png16(dir / "avatar.png", scaled);

    nlohmann::json j;
    j["source_method"] = to_string(a.source_method);
    j["normalization"] = {{"applied", a.normalization.applied},
                          {"reference_mean", a.normalization.reference_mean},
                          {"reference_std", a.normalization.reference_std}};
    std::ofstream out(dir / "meta.json");
    if (!out) throw UnreadableFile("cannot write " + (dir / "meta.json").string());
    out << j.dump(2) << "\n";
}

Avatar load_avatar(const std::filesystem::path& dir) {
    std::ifstream in(dir / "meta.json");
    if (!in) throw MissingUpstreamArtifact("no avatar metadata in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw UnreadableFile("bad meta.json in " + dir.string() + ": " + e.what());
    }
    Avatar a;
    a.image = read_csv_matrix(dir / "avatar.csv");
    a.source_method = factor_method_from_string(j.at("source_method").get<std::string>());
    const auto& n = j.at("normalization");
    a.normalization.applied = n.at("applied").get<bool>();
    a.normalization.reference_mean = n.at("reference_mean").get<double>();
    a.normalization.reference_std = n.at("reference_std").get<double>();
    return a;
}

} // namespace thermo
