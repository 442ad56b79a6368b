#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace lpart {

// Little-endian encoder used by the snapshot and feature-file formats.
class ByteWriter {
public:
    void put_magic(std::string_view magic) {
        for (char c : magic) bytes_.push_back(static_cast<std::uint8_t>(c));
    }
    void put_u8(std::uint8_t v) { bytes_.push_back(v); }
    void put_u32(std::uint32_t v) { put_le(v); }
    void put_u64(std::uint64_t v) { put_le(v); }
    void put_i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
    void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

    const std::vector<std::uint8_t>& bytes() const& { return bytes_; }
    std::vector<std::uint8_t> bytes() && { return std::move(bytes_); }
    void clear() { bytes_.clear(); }

private:
    template <typename U>
    void put_le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> bytes_;
};

// Little-endian decoder over a byte span. Running past the end raises FormatError
// carrying the offset where the read started. `base` shifts reported offsets when
// the span is a window into a larger file.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes, std::size_t base = 0)
        : bytes_(bytes), base_(base) {}

    void expect_magic(std::string_view magic) {
        const std::size_t at = offset();
        need(magic.size());
        if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0)
            throw FormatError("bad magic, expected \"" + std::string(magic) + "\"", at);
        pos_ += magic.size();
    }
    std::uint8_t get_u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::uint32_t get_u32() { return get_le<std::uint32_t>(); }
    std::uint64_t get_u64() { return get_le<std::uint64_t>(); }
    std::int32_t get_i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
    float get_f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
    double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

    std::size_t offset() const { return base_ + pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void expect_end() const {
        if (pos_ != bytes_.size()) throw FormatError("unexpected trailing bytes", offset());
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError("truncated data", offset());
    }

    template <typename U>
    U get_le() {
        need(sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

}  // namespace lpart
