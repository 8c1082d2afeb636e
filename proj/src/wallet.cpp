#include "albank/wallet.hpp"

#include <algorithm>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <fstream>
#include <iterator>

namespace albank {

Signature Wallet::sign(ByteView message) const { return crypto::ed25519_sign(private_key, message); }

Transaction Wallet::sign_transaction(std::uint8_t operation, const Wei& value, Bytes payload,
                                     std::uint64_t sequence) const {
    Transaction tx;
    tx.sender = address;
    tx.public_key = public_key;
    tx.operation = operation;
    tx.value = value;
    tx.payload = std::move(payload);
    tx.sequence = sequence;
    tx.signature = sign(tx.signing_bytes());
    tx.tx_id = tx.compute_id();
    return tx;
}

Wallet wallet_from_private_key(const crypto::SecretSeed& key) {
    Wallet w;
    w.private_key = key;
    w.public_key = crypto::ed25519_public_key(key);
    w.address = address_of(w.public_key);
    return w;
}

Wallet create_wallet(std::optional<ByteView> seed) {
    crypto::SecretSeed key{};
    if (seed) {
        auto d = crypto::sha256("albank/wallet-seed/v1", *seed);
        std::copy(d.bytes.begin(), d.bytes.end(), key.begin());
    } else {
        auto r = crypto::random_bytes(key.size());
        std::copy(r.begin(), r.end(), key.begin());
    }
    return wallet_from_private_key(key);
}

void save_wallet(const Wallet& wallet, const std::filesystem::path& path) {
    Writer w;
    w.u8(kWalletFileVersion).raw(wallet.private_key).fixed(wallet.public_key);
    const auto& data = w.data();

    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd < 0) throw std::runtime_error("cannot create wallet file " + path.string());
    ::fchmod(fd, 0600);
    auto n = ::write(fd, data.data(), data.size());
    ::fsync(fd);
    ::close(fd);
    if (n != static_cast<ssize_t>(data.size())) throw std::runtime_error("short write to " + path.string());
}

Wallet load_wallet(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open wallet file " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        Reader r(data);
        if (r.u8() != kWalletFileVersion) throw std::runtime_error("unsupported wallet file version");
        crypto::SecretSeed key{};
        auto raw = r.raw(key.size());
        std::copy(raw.begin(), raw.end(), key.begin());
        auto pub = r.fixed<PublicKey>();
        r.expect_done();
        auto w = wallet_from_private_key(key);
        if (w.public_key != pub) throw std::runtime_error("wallet file public key does not match private key");
        return w;
    } catch (const DecodeError& e) {
        throw std::runtime_error("malformed wallet file " + path.string() + ": " + e.what());
    }
}

Signature sign_nonce(const Wallet& wallet, const NonceValue& nonce) { return wallet.sign(nonce.view()); }

bool verify_nonce_signature(const PublicKey& key, const NonceValue& nonce, const Signature& sig) {
    return crypto::ed25519_verify(key, nonce.view(), sig);
}

Bytes SessionToken::signed_bytes() const {
    Writer w;
    w.raw(to_bytes("albank/session/v1")).fixed(subject).i64(issued_at).i64(expires_at);
    return std::move(w).take();
}

std::string SessionToken::encode() const {
    Writer w;
    w.fixed(subject).i64(issued_at).i64(expires_at).fixed(token_signature);
    return to_hex(w.data());
}

SessionToken SessionToken::decode(std::string_view hex) {
    try {
        auto raw = from_hex(hex);
        Reader r(raw);
        SessionToken t;
        t.subject = r.fixed<Address>();
        t.issued_at = r.i64();
        t.expires_at = r.i64();
        t.token_signature = r.fixed<Signature>();
        r.expect_done();
        return t;
    } catch (const std::exception&) {
        throw AuthError(AuthError::Code::TokenMalformed, "malformed session token");
    }
}

std::string auth_error_name(AuthError::Code code) {
    switch (code) {
    case AuthError::Code::UnknownNonce: return "UnknownNonce";
    case AuthError::Code::NonceConsumed: return "NonceConsumed";
    case AuthError::Code::BadSignature: return "BadSignature";
    case AuthError::Code::TokenMalformed: return "TokenMalformed";
    case AuthError::Code::TokenForged: return "TokenForged";
    case AuthError::Code::TokenExpired: return "TokenExpired";
    }
    return "AuthError";
}

TokenAuthority::TokenAuthority(const crypto::SecretSeed& server_key, std::chrono::seconds lifetime,
                               const Clock& clock)
    : key_(server_key), public_key_(crypto::ed25519_public_key(server_key)), lifetime_(lifetime), clock_(clock) {}

SessionToken TokenAuthority::issue(const Address& subject) const {
    SessionToken t;
    t.subject = subject;
    t.issued_at = clock_.wall_ms();
    t.expires_at = t.issued_at + std::chrono::duration_cast<std::chrono::milliseconds>(lifetime_).count();
    t.token_signature = crypto::ed25519_sign(key_, t.signed_bytes());
    return t;
}

Address TokenAuthority::authenticate(const SessionToken& token) const {
    if (!crypto::ed25519_verify(public_key_, token.signed_bytes(), token.token_signature))
        throw AuthError(AuthError::Code::TokenForged, "session token signature invalid");
    if (clock_.wall_ms() >= token.expires_at) throw AuthError(AuthError::Code::TokenExpired, "session token expired");
    return token.subject;
}

Address TokenAuthority::authenticate(std::string_view encoded) const {
    return authenticate(SessionToken::decode(encoded));
}

Authenticator::Authenticator(const TokenAuthority& tokens, std::chrono::seconds nonce_lifetime, const Clock& clock)
    : tokens_(tokens), nonce_lifetime_(nonce_lifetime), clock_(clock) {}

void Authenticator::prune_locked(std::int64_t now) {
    const auto ttl = std::chrono::duration_cast<std::chrono::milliseconds>(nonce_lifetime_).count();
    std::erase_if(nonces_, [&](const auto& kv) { return now - kv.second.issued_at >= ttl; });
}

Nonce Authenticator::issue_nonce(const Address& address) {
    Nonce n;
    auto r = crypto::random_bytes(NonceValue::size);
    n.value = NonceValue::from(r);
    n.issued_to = address;
    n.issued_at = clock_.wall_ms();

    std::lock_guard lock(mu_);
    prune_locked(n.issued_at);
    nonces_[n.value] = n;
    return n;
}

SessionToken Authenticator::verify_login(const Address& address, const NonceValue& nonce,
                                         const PublicKey& public_key, const Signature& signature) {
    std::lock_guard lock(mu_);
    const auto now = clock_.wall_ms();
    const auto ttl = std::chrono::duration_cast<std::chrono::milliseconds>(nonce_lifetime_).count();

    auto it = nonces_.find(nonce);
    if (it == nonces_.end() || it->second.issued_to != address || now - it->second.issued_at >= ttl)
        throw AuthError(AuthError::Code::UnknownNonce, "unknown or expired nonce");
    if (it->second.consumed) throw AuthError(AuthError::Code::NonceConsumed, "nonce already used");
    if (address_of(public_key) != address || !verify_nonce_signature(public_key, nonce, signature))
        throw AuthError(AuthError::Code::BadSignature, "signature does not match wallet address");

    it->second.consumed = true;
    return tokens_.issue(address);
}

std::size_t Authenticator::outstanding() const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(nonces_.begin(), nonces_.end(), [](const auto& kv) { return !kv.second.consumed; }));
}

} // namespace albank
