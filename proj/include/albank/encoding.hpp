#pragma once

// Canonical binary encoding used for everything that is hashed or signed.
//
//   u8/u32/u64   fixed width, big-endian
//   uint256      32 bytes, big-endian
//   bytes/string u32 big-endian length, then the raw bytes
//   fixed<N>     N raw bytes, no prefix
//
// Fields are always written in declaration order; there are no optional
// fields and no padding, so equal values encode to equal bytes.

#include "albank/amount.hpp"
#include "albank/types.hpp"

#include <stdexcept>

namespace albank {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Writer {
public:
    Writer& u8(std::uint8_t v);
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
    Writer& uint256(const Wei& v);
    Writer& bytes(ByteView v);
    Writer& string(std::string_view v);
    Writer& raw(ByteView v);

    template <std::size_t N, class Tag>
    Writer& fixed(const FixedBytes<N, Tag>& v) {
        return raw(v.view());
    }

    const Bytes& data() const& { return buf_; }
    Bytes take() && { return std::move(buf_); }

private:
    Bytes buf_;
};

/// Reads from a borrowed buffer. Every read past the end throws DecodeError.
class Reader {
public:
    explicit Reader(ByteView data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    Wei uint256();
    Bytes bytes();
    std::string string();
    ByteView raw(std::size_t n);

    template <class T>
    T fixed() {
        return T::from(raw(T::size));
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return remaining() == 0; }
    /// Throws unless the whole buffer was consumed.
    void expect_done() const;

private:
    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace albank
