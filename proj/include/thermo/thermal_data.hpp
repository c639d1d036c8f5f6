#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace thermo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Sequence of M x N temperature frames for one case.
struct ThermalSequence {
    std::vector<Matrix> frames;
    std::string case_id;
    std::optional<int> label; // symptomatic = 1 / healthy = 0

    int rows() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
    int cols() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
    int tau() const { return static_cast<int>(frames.size()); }
    // Throws on invariant violation (dims, finiteness, tau >= 2).
    void validate() const;
};

// Stacked vectorized frames, X in R^{MN x tau}. Column t is the row-major
// vectorization of frame t: X(i*N + j, t) = frame_t(i, j).
struct HeatMatrix {
    Matrix data;
    int m_rows = 0; // M
    int n_cols = 0; // N
    // carried through for round-tripping convenience
    std::string case_id;
    std::optional<int> label;

    int tau() const { return static_cast<int>(data.cols()); }
};

struct RoiMask {
    BoolMask mask;                          // true = inside breast ROI
    std::optional<BoolMask> reference_mask; // neutral patch between breasts

    void validate() const; // nonempty ROI, disjoint reference
};

enum class FrameFormat { CsvFrames, Pgm16, Png16 };

// Reads all frame files of the given format from a directory, in
// lexicographic filename order. 16-bit grayscale is mapped linearly to [0,1];
// CSV values are read verbatim.
ThermalSequence load_sequence(const std::filesystem::path& dir, FrameFormat format);

HeatMatrix stack_vectorize(const ThermalSequence& seq);
ThermalSequence unstack(const HeatMatrix& x);

// ---- frame/mask/matrix file IO ----

Matrix read_csv_matrix(const std::filesystem::path& file);
void write_csv_matrix(const std::filesystem::path& file, const Matrix& m,
                      const std::vector<std::string>& header_comments = {});

// PGM (P5) and PNG, 16-bit grayscale. Readers scale to [0,1].
Matrix read_pgm16(const std::filesystem::path& file);
void write_pgm16(const std::filesystem::path& file, const Matrix& unit_scaled);
Matrix read_png16(const std::filesystem::path& file);
void write_png16(const std::filesystem::path& file, const Matrix& unit_scaled);

// Mask files are PGM/PNG where nonzero = inside.
BoolMask read_mask(const std::filesystem::path& file);
void write_mask(const std::filesystem::path& file, const BoolMask& mask);

} // namespace thermo
