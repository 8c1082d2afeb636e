#pragma once

#include "albank/chain.hpp"
#include "albank/clock.hpp"
#include "albank/crypto.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>

namespace albank {

struct Wallet {
    crypto::SecretSeed private_key{};
    PublicKey public_key;
    Address address;

    Signature sign(ByteView message) const;

    /// Builds a fully formed transaction: signed, with tx_id filled in.
    Transaction sign_transaction(std::uint8_t operation, const Wei& value, Bytes payload,
                                 std::uint64_t sequence) const;
    Transaction sign_transaction(Operation operation, const Wei& value, Bytes payload,
                                 std::uint64_t sequence) const {
        return sign_transaction(static_cast<std::uint8_t>(operation), value, std::move(payload), sequence);
    }
};

/// Random keypair, or a deterministic one when a seed is given.
Wallet create_wallet(std::optional<ByteView> seed = std::nullopt);
Wallet wallet_from_private_key(const crypto::SecretSeed& key);

constexpr std::uint8_t kWalletFileVersion = 1;

/// File layout: version byte, 32-byte private key, 32-byte public key.
/// Created with mode 0600.
void save_wallet(const Wallet& wallet, const std::filesystem::path& path);
Wallet load_wallet(const std::filesystem::path& path);

struct NonceTag {};
using NonceValue = FixedBytes<32, NonceTag>;

struct Nonce {
    NonceValue value;
    Address issued_to;
    std::int64_t issued_at = 0;
    bool consumed = false;
};

/// The login challenge signs the raw nonce bytes, nothing else.
Signature sign_nonce(const Wallet& wallet, const NonceValue& nonce);
bool verify_nonce_signature(const PublicKey& key, const NonceValue& nonce, const Signature& sig);

struct SessionToken {
    Address subject;
    std::int64_t issued_at = 0;
    std::int64_t expires_at = 0;
    Signature token_signature;

    Bytes signed_bytes() const;
    /// Hex of subject || issued_at || expires_at || signature.
    std::string encode() const;
    static SessionToken decode(std::string_view hex);
};

class AuthError : public std::runtime_error {
public:
    enum class Code { UnknownNonce, NonceConsumed, BadSignature, TokenMalformed, TokenForged, TokenExpired };

    AuthError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string auth_error_name(AuthError::Code code);

/// Issues and checks server-signed session tokens.
class TokenAuthority {
public:
    TokenAuthority(const crypto::SecretSeed& server_key, std::chrono::seconds lifetime, const Clock& clock);

    SessionToken issue(const Address& subject) const;
    /// Returns the token subject; throws AuthError{TokenMalformed|TokenForged|TokenExpired}.
    Address authenticate(std::string_view encoded) const;
    Address authenticate(const SessionToken& token) const;

    const PublicKey& public_key() const { return public_key_; }

private:
    crypto::SecretSeed key_;
    PublicKey public_key_;
    std::chrono::seconds lifetime_;
    const Clock& clock_;
};

/// Server side of the nonce challenge-response login. Holds no credentials:
/// only outstanding nonces plus the token authority.
class Authenticator {
public:
    Authenticator(const TokenAuthority& tokens, std::chrono::seconds nonce_lifetime, const Clock& clock);

    Nonce issue_nonce(const Address& address);

    /// Success consumes the nonce and returns a token. Failure changes
    /// nothing. Throws AuthError{UnknownNonce|NonceConsumed|BadSignature}.
    SessionToken verify_login(const Address& address, const NonceValue& nonce, const PublicKey& public_key,
                              const Signature& signature);

    /// Issued and not yet used. Expired nonces count until the next
    /// issue_nonce prunes them.
    std::size_t outstanding() const;

private:
    void prune_locked(std::int64_t now);

    const TokenAuthority& tokens_;
    std::chrono::seconds nonce_lifetime_;
    const Clock& clock_;
    mutable std::mutex mu_;
    std::map<NonceValue, Nonce> nonces_;
};

} // namespace albank
