#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace albank {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Fixed-width byte string with value semantics. The Tag parameter keeps
/// digests, addresses and keys from being mixed up at compile time.
template <std::size_t N, class Tag>
struct FixedBytes {
    static constexpr std::size_t size = N;
    std::array<std::uint8_t, N> bytes{};

    ByteView view() const { return {bytes.data(), bytes.size()}; }
    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }
    static FixedBytes from(ByteView v) {
        if (v.size() != N) throw std::invalid_argument("fixed-width value has wrong length");
        FixedBytes out;
        std::copy(v.begin(), v.end(), out.bytes.begin());
        return out;
    }

    friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

struct DigestTag {};
struct AddressTag {};
struct PublicKeyTag {};
struct SignatureTag {};

using Digest = FixedBytes<32, DigestTag>;
using Address = FixedBytes<20, AddressTag>;
using PublicKey = FixedBytes<32, PublicKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

std::string to_hex(ByteView data);
/// Accepts an optional "0x" prefix. Throws std::invalid_argument on odd
/// length or non-hex characters.
Bytes from_hex(std::string_view text);

template <std::size_t N, class Tag>
std::string to_hex(const FixedBytes<N, Tag>& v) {
    return to_hex(v.view());
}

template <class T>
T fixed_from_hex(std::string_view text) {
    auto raw = from_hex(text);
    return T::from(raw);
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

} // namespace albank
