#include "thermo/errors.hpp"
#include "thermo/rng.hpp"
#include "thermo/thermal_data.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace thermo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ThermalSequence random_sequence(int rows, int cols, int tau, std::uint64_t seed) {
    Rng rng(seed);
    ThermalSequence seq;
    for (int t = 0; t < tau; ++t) {
        Matrix f(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) f(r, c) = rng.uniform(20.0, 40.0);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

} // namespace

TEST_SUITE("thermal_data") {

TEST_CASE("stack_vectorize lays frames out row-major") {
    ThermalSequence seq;
    Matrix f(2, 2);
    f << 1, 2, 3, 4;
    seq.frames = {f, f};
    const HeatMatrix x = stack_vectorize(seq);
    CHECK(x.data.rows() == 4);
    CHECK(x.data.cols() == 2);
    CHECK(x.data(0, 0) == 1);
    CHECK(x.data(1, 0) == 2);
    CHECK(x.data(2, 0) == 3);
    CHECK(x.data(3, 0) == 4);
}

TEST_CASE("64x64 sequence of 23 frames stacks to 4096x23") {
    const ThermalSequence seq = random_sequence(64, 64, 23, 1);
    const HeatMatrix x = stack_vectorize(seq);
    CHECK(x.data.rows() == 4096);
    CHECK(x.data.cols() == 23);
    CHECK(x.m_rows == 64);
    CHECK(x.n_cols == 64);
}

TEST_CASE("stack/unstack round-trips bit-exactly") {
    const ThermalSequence seq = random_sequence(8, 8, 5, 2);
    const ThermalSequence back = unstack(stack_vectorize(seq));
    REQUIRE(back.frames.size() == seq.frames.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t)
        CHECK((back.frames[t].array() == seq.frames[t].array()).all());
}

TEST_CASE("unstack rebuilds the 2x2 frame from its column") {
    HeatMatrix x;
    x.data.resize(4, 1);
    x.data << 1, 2, 3, 4;
    x.m_rows = 2;
    x.n_cols = 2;
    const ThermalSequence seq = unstack(x);
    CHECK(seq.frames[0](0, 0) == 1);
    CHECK(seq.frames[0](0, 1) == 2);
    CHECK(seq.frames[0](1, 0) == 3);
    CHECK(seq.frames[0](1, 1) == 4);
}

TEST_CASE("unstack rejects a row count that is not m*n") {
    HeatMatrix x;
    x.data = Matrix::Zero(8, 2);
    x.m_rows = 3;
    x.n_cols = 3;
    CHECK_THROWS_AS(unstack(x), ShapeInconsistent);
}

TEST_CASE("heat matrix columns keep per-frame min/max/mean") {
    const ThermalSequence seq = random_sequence(6, 7, 4, 3);
    const HeatMatrix x = stack_vectorize(seq);
    for (int t = 0; t < 4; ++t) {
        CHECK(x.data.col(t).minCoeff() == seq.frames[static_cast<std::size_t>(t)].minCoeff());
        CHECK(x.data.col(t).maxCoeff() == seq.frames[static_cast<std::size_t>(t)].maxCoeff());
        CHECK(x.data.col(t).mean() ==
              doctest::Approx(seq.frames[static_cast<std::size_t>(t)].mean()).epsilon(1e-14));
    }
}

TEST_CASE("load_sequence reads CSV frames in filename order") {
    const fs::path dir = fresh_dir("thermo_seq_csv");
    const ThermalSequence seq = random_sequence(64, 64, 23, 4);
    for (int t = 0; t < 23; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame%03d.csv", t);
        write_csv_matrix(dir / name, seq.frames[static_cast<std::size_t>(t)]);
    }
    const ThermalSequence loaded = load_sequence(dir, FrameFormat::CsvFrames);
    CHECK(loaded.tau() == 23);
    CHECK(loaded.rows() == 64);
    CHECK(loaded.cols() == 64);
    for (int t = 0; t < 23; ++t)
        CHECK((loaded.frames[static_cast<std::size_t>(t)].array() ==
               seq.frames[static_cast<std::size_t>(t)].array())
                  .all());
}

TEST_CASE("load_sequence wants at least two frames") {
    const fs::path dir = fresh_dir("thermo_seq_single");
    write_csv_matrix(dir / "frame000.csv", Matrix::Zero(4, 4));
    CHECK_THROWS_AS(load_sequence(dir, FrameFormat::CsvFrames), MissingFrames);
}

TEST_CASE("load_sequence rejects mixed frame sizes") {
    const fs::path dir = fresh_dir("thermo_seq_mixed");
    write_csv_matrix(dir / "frame000.csv", Matrix::Zero(8, 8));
    write_csv_matrix(dir / "frame001.csv", Matrix::Zero(4, 4));
    CHECK_THROWS_AS(load_sequence(dir, FrameFormat::CsvFrames), DimensionMismatch);
}

TEST_CASE("pgm16 and png16 round-trip unit-scaled images to 16-bit precision") {
    const fs::path dir = fresh_dir("thermo_img_io");
    Rng rng(5);
    Matrix m(10, 12);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 12; ++c) m(r, c) = rng.uniform01();
    write_pgm16(dir / "a.pgm", m);
    write_png16(dir / "a.png", m);
    const Matrix from_pgm = read_pgm16(dir / "a.pgm");
    const Matrix from_png = read_png16(dir / "a.png");
    CHECK((from_pgm - m).cwiseAbs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
    CHECK((from_png - m).cwiseAbs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
    // the two containers carry identical samples
    CHECK((from_pgm.array() == from_png.array()).all());
}

TEST_CASE("mask round-trip") {
    const fs::path dir = fresh_dir("thermo_mask_io");
    BoolMask m = BoolMask::Constant(5, 6, false);
    m(1, 2) = true;
    m(4, 5) = true;
    write_mask(dir / "m.png", m);
    const BoolMask back = read_mask(dir / "m.png");
    CHECK((back == m).all());
}

TEST_CASE("roi masks validate content") {
    RoiMask roi;
    roi.mask = BoolMask::Constant(4, 4, false);
    CHECK_THROWS_AS(roi.validate(), DataError); // no pixels inside
    roi.mask(1, 1) = true;
    CHECK_NOTHROW(roi.validate());
    roi.reference_mask = BoolMask::Constant(4, 4, false);
    (*roi.reference_mask)(1, 1) = true; // overlaps the ROI
    CHECK_THROWS_AS(roi.validate(), DataError);
    (*roi.reference_mask)(1, 1) = false;
    (*roi.reference_mask)(0, 0) = true;
    CHECK_NOTHROW(roi.validate());
}

TEST_CASE("sequence validation catches ragged and non-finite input") {
    ThermalSequence seq = random_sequence(4, 4, 3, 6);
    CHECK_NOTHROW(seq.validate());
    seq.frames[1](2, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(seq.validate(), DataError);
    seq = random_sequence(4, 4, 3, 7);
    seq.frames[2] = Matrix::Zero(3, 4);
    CHECK_THROWS_AS(seq.validate(), DimensionMismatch);
    seq = random_sequence(4, 4, 1, 8);
    CHECK_THROWS_AS(seq.validate(), MissingFrames);
}

} // TEST_SUITE
