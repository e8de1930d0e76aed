#include "cmpl/binio.hpp"

#include <array>
#include <istream>
#include <ostream>

namespace cmpl::binio {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    }
    T v{};
    std::memcpy(&v, &bits, sizeof(T));
    return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f32(std::ostream& out, float v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, v); }

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
float read_f32(std::istream& in) { return read_le<float>(in); }
double read_f64(std::istream& in) { return read_le<double>(in); }

std::string read_string(std::istream& in) {
    const auto n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

void write_magic(std::ostream& out, const char magic[8]) { out.write(magic, 8); }

bool check_magic(std::istream& in, const char magic[8]) {
    char buf[8] = {};
    in.read(buf, 8);
    return in.good() && std::memcmp(buf, magic, 8) == 0;
}

}  // namespace cmpl::binio
