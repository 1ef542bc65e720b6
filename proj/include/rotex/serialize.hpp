#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "rotex/errors.hpp"

namespace rotex {

// Little-endian flat binary containers: 8-byte magic, u32 fields, f64 blocks.
class BinaryWriter {
  public:
    explicit BinaryWriter(const std::string& path);
    void magic(const char tag[8]);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_block(const std::vector<double>& v);
    void close();

  private:
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
  public:
    explicit BinaryReader(const std::string& path);
    void expect_magic(const char tag[8]);
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<double> f64_block(std::size_t count);

  private:
    template <typename T>
    T read_raw();
    std::ifstream in_;
    std::string path_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rotex
