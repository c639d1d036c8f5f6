#include "thermo/thermal_data.hpp"

#include "thermo/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace thermo {

namespace {

void require_readable(std::ifstream& in, const std::filesystem::path& file) {
    if (!in) throw UnreadableFile("cannot open " + file.string());
}

} // namespace

Matrix read_csv_matrix(const std::filesystem::path& file) {
    std::ifstream in(file);
    require_readable(in, file);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw UnreadableFile("non-numeric cell '" + cell + "' in " + file.string());
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw UnreadableFile("no numeric rows in " + file.string());
    const std::size_t ncols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != ncols) throw UnreadableFile("ragged rows in " + file.string());
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(ncols));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_csv_matrix(const std::filesystem::path& file, const Matrix& m,
                      const std::vector<std::string>& header_comments) {
    std::ofstream out(file);
    if (!out) throw UnreadableFile("cannot write " + file.string());
    for (const auto& c : header_comments) out << "# " << c << "\n";
    char buf[40];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw UnreadableFile("write failed for " + file.string());
}

// ---- PGM (binary P5, maxval 65535, big-endian samples) ----

Matrix read_pgm16(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    require_readable(in, file);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw UnreadableFile("not a binary PGM: " + file.string());
    auto next_int = [&in, &file]() {
        // skip whitespace and '#' comment lines
        int c = in.peek();
        while (c == '#' || std::isspace(c)) {
            if (c == '#') {
                std::string junk;
                std::getline(in, junk);
            } else {
                in.get();
            }
            c = in.peek();
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw UnreadableFile("bad PGM header in " + file.string());
        return v;
    };
    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    in.get(); // single whitespace after maxval
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw UnreadableFile("bad PGM dimensions in " + file.string());
    const bool two_byte = maxval > 255;
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * (two_byte ? 2 : 1));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw UnreadableFile("truncated PGM data in " + file.string());
    Matrix m(h, w);
    const double scale = 1.0 / static_cast<double>(maxval);
    std::size_t p = 0;
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j) {
            unsigned v = buf[p++];
            if (two_byte) v = (v << 8) | buf[p++];
            m(i, j) = static_cast<double>(v) * scale;
        }
    return m;
}

void write_pgm16(const std::filesystem::path& file, const Matrix& unit_scaled) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw UnreadableFile("cannot write " + file.string());
    out << "P5\n" << unit_scaled.cols() << " " << unit_scaled.rows() << "\n65535\n";
    for (int i = 0; i < unit_scaled.rows(); ++i)
        for (int j = 0; j < unit_scaled.cols(); ++j) {
            const double clamped = std::clamp(unit_scaled(i, j), 0.0, 1.0);
            const unsigned v = static_cast<unsigned>(std::lround(clamped * 65535.0));
            out.put(static_cast<char>((v >> 8) & 0xff));
            out.put(static_cast<char>(v & 0xff));
        }
    if (!out) throw UnreadableFile("write failed for " + file.string());
}

// ---- PNG, 16-bit grayscale via libpng ----

namespace {

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

} // namespace

Matrix read_png16(const std::filesystem::path& file) {
    PngReadCloser c;
    c.fp = std::fopen(file.string().c_str(), "rb");
    if (!c.fp) throw UnreadableFile("cannot open " + file.string());
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = c.png ? png_create_info_struct(c.png) : nullptr;
    if (!c.png || !c.info) throw UnreadableFile("libpng init failed for " + file.string());
    if (setjmp(png_jmpbuf(c.png))) throw UnreadableFile("corrupt PNG: " + file.string());
    png_init_io(c.png, c.fp);
    png_read_info(c.png, c.info);

    const png_uint_32 w = png_get_image_width(c.png, c.info);
    const png_uint_32 h = png_get_image_height(c.png, c.info);
    const int depth = png_get_bit_depth(c.png, c.info);
    const int color = png_get_color_type(c.png, c.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw UnreadableFile("PNG is not grayscale: " + file.string());
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(c.png);
    png_read_update_info(c.png, c.info);

    const std::size_t rowbytes = png_get_rowbytes(c.png, c.info);
    std::vector<unsigned char> row(rowbytes);
    Matrix m(static_cast<int>(h), static_cast<int>(w));
    const bool two_byte = depth == 16;
    const double scale = two_byte ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (png_uint_32 i = 0; i < h; ++i) {
        png_read_row(c.png, row.data(), nullptr);
        for (png_uint_32 j = 0; j < w; ++j) {
            const unsigned v = two_byte ? (static_cast<unsigned>(row[2 * j]) << 8) | row[2 * j + 1]
                                        : row[j];
            m(static_cast<int>(i), static_cast<int>(j)) = static_cast<double>(v) * scale;
        }
    }
    return m;
}

void write_png16(const std::filesystem::path& file, const Matrix& unit_scaled) {
    PngWriteCloser c;
    c.fp = std::fopen(file.string().c_str(), "wb");
    if (!c.fp) throw UnreadableFile("cannot write " + file.string());
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = c.png ? png_create_info_struct(c.png) : nullptr;
    if (!c.png || !c.info) throw UnreadableFile("libpng init failed for " + file.string());
    if (setjmp(png_jmpbuf(c.png))) throw UnreadableFile("PNG write failed: " + file.string());
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, static_cast<png_uint_32>(unit_scaled.cols()),
                 static_cast<png_uint_32>(unit_scaled.rows()), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    std::vector<unsigned char> row(static_cast<std::size_t>(unit_scaled.cols()) * 2);
    for (int i = 0; i < unit_scaled.rows(); ++i) {
        for (int j = 0; j < unit_scaled.cols(); ++j) {
            const double clamped = std::clamp(unit_scaled(i, j), 0.0, 1.0);
            const unsigned v = static_cast<unsigned>(std::lround(clamped * 65535.0));
            row[2 * static_cast<std::size_t>(j)] = static_cast<unsigned char>((v >> 8) & 0xff);
            row[2 * static_cast<std::size_t>(j) + 1] = static_cast<unsigned char>(v & 0xff);
        }
        png_write_row(c.png, row.data());
    }
    png_write_end(c.png, nullptr);
}

BoolMask read_mask(const std::filesystem::path& file) {
    const auto ext = file.extension().string();
    Matrix m;
    if (ext == ".png") {
        m = read_png16(file);
    } else if (ext == ".pgm") {
        m = read_pgm16(file);
    } else {
        throw UnreadableFile("unsupported mask format: " + file.string());
    }
    return m.array() != 0.0;
}

void write_mask(const std::filesystem::path& file, const BoolMask& mask) {
    Matrix m(mask.rows(), mask.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) = mask(i, j) ? 1.0 : 0.0;
    const auto ext = file.extension().string();
    if (ext == ".png") {
        write_png16(file, m);
    } else {
        write_pgm16(file, m);
    }
}

} // namespace thermo
