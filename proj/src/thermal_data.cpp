#include "thermo/thermal_data.hpp"

#include "thermo/errors.hpp"

#include <algorithm>
#include <cmath>

namespace thermo {

void ThermalSequence::validate() const {
    if (frames.size() < 2) throw MissingFrames("sequence needs at least 2 frames");
    const auto r = frames.front().rows();
    const auto c = frames.front().cols();
    if (r < 2 || c < 2) throw DimensionMismatch("frames must be at least 2x2");
    for (const auto& f : frames) {
        if (f.rows() != r || f.cols() != c)
            throw DimensionMismatch("inconsistent frame dimensions");
        if (!f.allFinite()) throw DataError("non-finite pixel value in sequence " + case_id);
    }
}

void RoiMask::validate() const {
    if (!mask.any()) throw DataError("ROI mask has no pixels");
    if (reference_mask) {
        if (reference_mask->rows() != mask.rows() || reference_mask->cols() != mask.cols())
            throw DimensionMismatch("reference mask dimensions differ from ROI");
        if ((mask && *reference_mask).any())
            throw DataError("reference mask overlaps ROI");
    }
}

ThermalSequence load_sequence(const std::filesystem::path& dir, FrameFormat format) {
    namespace fs = std::filesystem;
    const char* ext = format == FrameFormat::CsvFrames ? ".csv"
                      : format == FrameFormat::Pgm16   ? ".pgm"
                                                       : ".png";
    if (!fs::is_directory(dir)) throw UnreadableFile("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (files.size() < 2)
        throw MissingFrames("found " + std::to_string(files.size()) + " frame files in " + dir.string());

    ThermalSequence seq;
    seq.case_id = dir.filename().string();
    seq.frames.reserve(files.size());
    for (const auto& f : files) {
        Matrix frame;
        switch (format) {
            case FrameFormat::CsvFrames: frame = read_csv_matrix(f); break;
            case FrameFormat::Pgm16: frame = read_pgm16(f); break;
            case FrameFormat::Png16: frame = read_png16(f); break;
        }
        if (!seq.frames.empty() &&
            (frame.rows() != seq.frames.front().rows() || frame.cols() != seq.frames.front().cols()))
            throw DimensionMismatch(f.string() + " has dimensions " + std::to_string(frame.rows()) +
                                    "x" + std::to_string(frame.cols()));
        seq.frames.push_back(std::move(frame));
    }
    seq.validate();
    return seq;
}

HeatMatrix stack_vectorize(const ThermalSequence& seq) {
    seq.validate();
    const int m = seq.rows(), n = seq.cols(), tau = seq.tau();
    HeatMatrix x;
    x.m_rows = m;
    x.n_cols = n;
    x.case_id = seq.case_id;
    x.label = seq.label;
    x.data.resize(static_cast<long>(m) * n, tau);
    for (int t = 0; t < tau; ++t)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) x.data(static_cast<long>(i) * n + j, t) = seq.frames[t](i, j);
    return x;
}

ThermalSequence unstack(const HeatMatrix& x) {
    if (x.m_rows < 1 || x.n_cols < 1 ||
        x.data.rows() != static_cast<long>(x.m_rows) * x.n_cols)
        throw ShapeInconsistent("heat matrix rows " + std::to_string(x.data.rows()) +
                                " do not equal " + std::to_string(x.m_rows) + "*" +
                                std::to_string(x.n_cols));
    ThermalSequence seq;
    seq.case_id = x.case_id;
    seq.label = x.label;
    seq.frames.reserve(static_cast<std::size_t>(x.tau()));
    for (int t = 0; t < x.tau(); ++t) {
        Matrix f(x.m_rows, x.n_cols);
        for (int i = 0; i < x.m_rows; ++i)
            for (int j = 0; j < x.n_cols; ++j) f(i, j) = x.data(static_cast<long>(i) * x.n_cols + j, t);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

} // namespace thermo
