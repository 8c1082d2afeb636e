#include "albank/encoding.hpp"

#include <limits>

namespace albank {

Writer& Writer::u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
}

Writer& Writer::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

Writer& Writer::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) buf_.push_back(static_cast<std::uint8_t>(v >> shift));
    return *this;
}

Writer& Writer::uint256(const Wei& v) {
    std::array<std::uint8_t, 32> out{};
    Bytes tmp;
    boost::multiprecision::export_bits(v, std::back_inserter(tmp), 8, true);
    std::copy(tmp.begin(), tmp.end(), out.end() - static_cast<std::ptrdiff_t>(tmp.size()));
    buf_.insert(buf_.end(), out.begin(), out.end());
    return *this;
}

Writer& Writer::bytes(ByteView v) {
    if (v.size() > std::numeric_limits<std::uint32_t>::max()) throw std::length_error("field too long");
    u32(static_cast<std::uint32_t>(v.size()));
    return raw(v);
}

Writer& Writer::string(std::string_view v) {
    return bytes(ByteView(reinterpret_cast<const std::uint8_t*>(v.data()), v.size()));
}

Writer& Writer::raw(ByteView v) {
    buf_.insert(buf_.end(), v.begin(), v.end());
    return *this;
}

ByteView Reader::raw(std::size_t n) {
    if (n > remaining()) throw DecodeError("unexpected end of input");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t Reader::u8() { return raw(1)[0]; }

std::uint32_t Reader::u32() {
    auto b = raw(4);
    std::uint32_t v = 0;
    for (auto x : b) v = v << 8 | x;
    return v;
}

std::uint64_t Reader::u64() {
    auto b = raw(8);
    std::uint64_t v = 0;
    for (auto x : b) v = v << 8 | x;
    return v;
}

Wei Reader::uint256() {
    auto b = raw(32);
    Wei v;
    boost::multiprecision::import_bits(v, b.begin(), b.end(), 8, true);
    return v;
}

Bytes Reader::bytes() {
    auto n = u32();
    auto b = raw(n);
    return Bytes(b.begin(), b.end());
}

std::string Reader::string() {
    auto n = u32();
    auto b = raw(n);
    return std::string(b.begin(), b.end());
}

void Reader::expect_done() const {
    if (!done()) throw DecodeError("trailing bytes after value");
}

} // namespace albank
