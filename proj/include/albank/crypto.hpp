#pragma once

// Thin wrappers over OpenSSL's EVP interface. Nothing here knows about
// blocks, wallets or KYC records.

#include "albank/types.hpp"

#include <optional>
#include <stdexcept>

namespace albank::crypto {

class CryptoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Digest sha256(ByteView data);
Digest sha256(std::string_view label, ByteView data);

Bytes random_bytes(std::size_t n);

/// HKDF-SHA256 (extract + expand).
Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length);

using SecretSeed = std::array<std::uint8_t, 32>;

PublicKey ed25519_public_key(const SecretSeed& seed);
Signature ed25519_sign(const SecretSeed& seed, ByteView message);
bool ed25519_verify(const PublicKey& key, ByteView message, const Signature& sig);

PublicKey x25519_public_key(const SecretSeed& secret);
/// Raw X25519 shared secret. Throws CryptoError for low-order peer keys.
SecretSeed x25519_shared(const SecretSeed& secret, const PublicKey& peer);

constexpr std::size_t kAeadNonceSize = 12;
constexpr std::size_t kAeadTagSize = 16;

/// ChaCha20-Poly1305. Output is ciphertext || tag.
Bytes aead_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plaintext);
/// nullopt when authentication fails.
std::optional<Bytes> aead_open(ByteView key, ByteView nonce, ByteView aad, ByteView sealed);

} // namespace albank::crypto

namespace albank {

/// Account address: the final 20 bytes of SHA-256(public key).
Address address_of(const PublicKey& key);

} // namespace albank
