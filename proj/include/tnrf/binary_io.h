// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

// Little-endian byte streams for the binary file formats, independent of
// host byte order.

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tnrf {

class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ByteWriter {
  public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            bytes_.push_back(std::uint8_t(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            bytes_.push_back(std::uint8_t(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<std::uint8_t> &bytes() const { return bytes_; }
    void reserve(std::size_t n) { bytes_.reserve(n); }

  private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
  public:
    explicit ByteReader(std::vector<std::uint8_t> bytes, std::string source = {})
        : bytes_(std::move(bytes)), source_(std::move(source)) {}

    void expect_magic(std::string_view m) {
        need(m.size());
        if (std::string_view(reinterpret_cast<const char *>(bytes_.data() + pos_), m.size()) != m)
            fail("bad magic, expected '" + std::string(m) + "'");
        pos_ += m.size();
    }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t(bytes_[pos_++]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0)
            fail(std::to_string(remaining()) + " trailing bytes");
    }
    [[noreturn]] void fail(const std::string &what) const {
        throw FormatError(source_ + ": " + what);
    }

  private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n)
            fail("unexpected end of data");
    }

    std::vector<std::uint8_t> bytes_;
    std::string source_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes);

}  // namespace tnrf
