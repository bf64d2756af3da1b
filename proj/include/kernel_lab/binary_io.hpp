#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace kernel_lab::binary {

// Little-endian writer over an in-memory buffer.
class Writer {
public:
    void bytes(std::string_view raw) { buf_.insert(buf_.end(), raw.begin(), raw.end()); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<char>& data() const { return buf_; }

private:
    std::vector<char> buf_;
};

// Little-endian reader; every short read is a FormatError carrying the offset.
class Reader {
public:
    Reader(std::vector<char> data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    std::string bytes(std::size_t n) {
        need(n);
        std::string out(data_.data() + pos_, n);
        pos_ += n;
        return out;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::uint32_t u32_be() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(data_[pos_ + i]);
        pos_ += 4;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    const char* cursor() const { return data_.data() + pos_; }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(source_ + ": " + what, pos_); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(source_ + ": truncated, needed " + std::to_string(n) + " more bytes", pos_);
        }
    }

    std::vector<char> data_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading '" + path + "'");
    return data;
}

inline void write_file(const std::string& path, const std::vector<char>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace kernel_lab::binary
