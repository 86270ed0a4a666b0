#include "gfat/matrix.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "gfat/errors.hpp"

namespace gfat {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'A', 'T'};

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

bool Matrix64::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix64 read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open matrix file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw IoError("bad magic in matrix file: " + path);
    }
    const std::uint32_t rows = read_u32_le(in);
    const std::uint32_t cols = read_u32_le(in);
    if (!in) throw IoError("truncated header in matrix file: " + path);
    Matrix64 m(rows, cols);
    std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw IoError("truncated payload in matrix file: " + path);
    for (std::size_t i = 0; i < buf.size(); ++i) m.data()[i] = buf[i];
    return m;
}

void write_matrix_file(const std::string& path, const Matrix64& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write matrix file: " + path);
    out.write(kMagic, 4);
    write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    std::vector<float> buf(m.data().size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("short write to matrix file: " + path);
}

}  // namespace gfat
