#include "rotex/serialize.hpp"

#include <cstring>
#include <sstream>

namespace rotex {

BinaryWriter::BinaryWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IngestError("cannot open " + path + " for writing");
}

void BinaryWriter::magic(const char tag[8]) { out_.write(tag, 8); }

void BinaryWriter::u32(std::uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::f64_block(const std::vector<double>& v) {
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinaryWriter::close() {
    out_.close();
    if (!out_) throw IngestError("write to " + path_ + " failed");
}

BinaryReader::BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IngestError("cannot open " + path);
}

template <typename T>
T BinaryReader::read_raw() {
    T v;
    in_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in_) throw IngestError("truncated file " + path_);
    return v;
}

void BinaryReader::expect_magic(const char tag[8]) {
    char buf[8];
    in_.read(buf, 8);
    if (!in_ || std::memcmp(buf, tag, 8) != 0) {
        throw IngestError(path_ + ": bad magic, expected " + std::string(tag, 8));
    }
}

std::uint32_t BinaryReader::u32() { return read_raw<std::uint32_t>(); }

std::uint64_t BinaryReader::u64() { return read_raw<std::uint64_t>(); }

double BinaryReader::f64() { return read_raw<double>(); }

std::vector<double> BinaryReader::f64_block(std::size_t count) {
    std::vector<double> v(count);
    in_.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
    if (!in_) throw IngestError("truncated file " + path_);
    return v;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IngestError("write to " + path + " failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rotex
