#include "albank/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include <memory>

namespace albank {

std::string to_hex(ByteView data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {
int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}
} // namespace

Bytes from_hex(std::string_view text) {
    if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
    if (text.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
    Bytes out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = hex_value(text[i]);
        int lo = hex_value(text[i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex character");
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

} // namespace albank

namespace albank::crypto {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct KdfDeleter {
    void operator()(EVP_KDF* p) const { EVP_KDF_free(p); }
};
struct KdfCtxDeleter {
    void operator()(EVP_KDF_CTX* p) const { EVP_KDF_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

void check(int ok, const char* what) {
    if (ok != 1) throw CryptoError(what);
}

PkeyPtr private_key(int type, const SecretSeed& seed) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(type, nullptr, seed.data(), seed.size()));
    if (!key) throw CryptoError("cannot load private key");
    return key;
}

PublicKey raw_public(EVP_PKEY* key) {
    PublicKey out;
    std::size_t len = out.bytes.size();
    check(EVP_PKEY_get_raw_public_key(key, out.bytes.data(), &len), "cannot export public key");
    if (len != out.bytes.size()) throw CryptoError("unexpected public key length");
    return out;
}

} // namespace

Digest sha256(ByteView data) {
    Digest out;
    unsigned int len = 0;
    check(EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr),
          "sha256 failed");
    return out;
}

Digest sha256(std::string_view label, ByteView data) {
    Bytes buf;
    buf.reserve(label.size() + 1 + data.size());
    buf.insert(buf.end(), label.begin(), label.end());
    buf.push_back(0);
    buf.insert(buf.end(), data.begin(), data.end());
    return sha256(buf);
}

Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    check(RAND_bytes(out.data(), static_cast<int>(n)), "RAND_bytes failed");
    return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length) {
    std::unique_ptr<EVP_KDF, KdfDeleter> kdf(EVP_KDF_fetch(nullptr, "HKDF", nullptr));
    if (!kdf) throw CryptoError("HKDF unavailable");
    std::unique_ptr<EVP_KDF_CTX, KdfCtxDeleter> ctx(EVP_KDF_CTX_new(kdf.get()));
    if (!ctx) throw CryptoError("HKDF context allocation failed");

    char digest[] = "SHA256";
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, const_cast<std::uint8_t*>(ikm.data()),
                                          ikm.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT,
                                          const_cast<std::uint8_t*>(salt.data()), salt.size()),
        OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO,
                                          const_cast<std::uint8_t*>(info.data()), info.size()),
        OSSL_PARAM_construct_end(),
    };
    Bytes out(length);
    if (EVP_KDF_derive(ctx.get(), out.data(), out.size(), params) <= 0)
        throw CryptoError("HKDF derive failed");
    return out;
}

PublicKey ed25519_public_key(const SecretSeed& seed) {
    auto key = private_key(EVP_PKEY_ED25519, seed);
    return raw_public(key.get());
}

Signature ed25519_sign(const SecretSeed& seed, ByteView message) {
    auto key = private_key(EVP_PKEY_ED25519, seed);
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()), "sign init failed");
    Signature sig;
    std::size_t len = sig.bytes.size();
    check(EVP_DigestSign(ctx.get(), sig.bytes.data(), &len, message.data(), message.size()),
          "sign failed");
    return sig;
}

bool ed25519_verify(const PublicKey& key, ByteView message, const Signature& sig) {
    PkeyPtr pub(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, key.bytes.data(),
                                            key.bytes.size()));
    if (!pub) return false;
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pub.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), sig.bytes.data(), sig.bytes.size(), message.data(),
                            message.size()) == 1;
}

PublicKey x25519_public_key(const SecretSeed& secret) {
    auto key = private_key(EVP_PKEY_X25519, secret);
    return raw_public(key.get());
}

SecretSeed x25519_shared(const SecretSeed& secret, const PublicKey& peer) {
    auto key = private_key(EVP_PKEY_X25519, secret);
    PkeyPtr peer_key(
        EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer.bytes.data(), peer.bytes.size()));
    if (!peer_key) throw CryptoError("invalid X25519 peer key");
    std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    check(EVP_PKEY_derive_init(ctx.get()), "derive init failed");
    check(EVP_PKEY_derive_set_peer(ctx.get(), peer_key.get()), "invalid X25519 peer key");
    SecretSeed out{};
    std::size_t len = out.size();
    check(EVP_PKEY_derive(ctx.get(), out.data(), &len), "X25519 derive failed");
    return out;
}

Bytes aead_seal(ByteView key, ByteView nonce, ByteView aad, ByteView plaintext) {
    if (key.size() != 32 || nonce.size() != kAeadNonceSize)
        throw CryptoError("bad AEAD key or nonce length");
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    check(EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()),
          "AEAD init failed");
    int len = 0;
    if (!aad.empty())
        check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
              "AEAD aad failed");
    Bytes out(plaintext.size() + kAeadTagSize);
    int written = 0;
    if (!plaintext.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                                static_cast<int>(plaintext.size())),
              "AEAD encrypt failed");
        written = len;
    }
    check(EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len), "AEAD final failed");
    written += len;
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kAeadTagSize, out.data() + written),
          "AEAD tag failed");
    return out;
}

std::optional<Bytes> aead_open(ByteView key, ByteView nonce, ByteView aad, ByteView sealed) {
    if (key.size() != 32 || nonce.size() != kAeadNonceSize || sealed.size() < kAeadTagSize)
        return std::nullopt;
    std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
    if (EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(), nonce.data()) != 1)
        return std::nullopt;
    const std::size_t body = sealed.size() - kAeadTagSize;
    int len = 0;
    if (!aad.empty() &&
        EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        return std::nullopt;
    Bytes out(body);
    int written = 0;
    if (body > 0) {
        if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)) != 1)
            return std::nullopt;
        written = len;
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kAeadTagSize,
                            const_cast<std::uint8_t*>(sealed.data() + body)) != 1)
        return std::nullopt;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) return std::nullopt;
    return out;
}

} // namespace albank::crypto

namespace albank {

Address address_of(const PublicKey& key) {
    auto d = crypto::sha256(key.view());
    return Address::from(d.view().subspan(Digest::size - Address::size));
}

} // namespace albank
