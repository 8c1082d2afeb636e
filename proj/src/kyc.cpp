#include "albank/kyc.hpp"

#include <chrono>

namespace albank {

namespace {

constexpr std::string_view kTokenLabel = "albank/kyc-token/v1";
constexpr std::string_view kAeadSalt = "albank/kyc-aead/v1";

crypto::SecretSeed derive_x25519_secret(ByteView ikm, std::string_view label) {
    auto raw = crypto::hkdf_sha256(ikm, to_bytes(label), to_bytes("x25519"), 32);
    crypto::SecretSeed out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

Bytes aead_key(const crypto::SecretSeed& shared, const Address& sender, const PublicKey& wallet_key,
               const PublicKey& node_key) {
    Writer info;
    info.fixed(sender).fixed(wallet_key).fixed(node_key);
    return crypto::hkdf_sha256(shared, to_bytes(kAeadSalt), info.data(), 32);
}

KycSubmission open_with(const crypto::SecretSeed& shared, const Address& sender, const PublicKey& wallet_key,
                        const PublicKey& node_key, const EncryptedKycPayload& p) {
    auto key = aead_key(shared, sender, wallet_key, node_key);
    auto plain = crypto::aead_open(key, p.nonce, sender.view(), p.ciphertext);
    if (!plain) throw KycError(KycError::Code::DecryptionFailed, "KYC payload failed authentication");
    try {
        return KycSubmission::decode(*plain);
    } catch (const DecodeError& e) {
        throw KycError(KycError::Code::DecryptionFailed, std::string("KYC payload malformed: ") + e.what());
    }
}

} // namespace

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (s[i] < '0' || s[i] > '9') return false;
    auto num = [&](std::size_t pos, std::size_t len) {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
        return v;
    };
    std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)}, std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                    std::chrono::day{static_cast<unsigned>(num(8, 2))}};
    return ymd.ok();
}

bool is_email_shaped(std::string_view s) {
    auto at = s.find('@');
    if (at == std::string_view::npos || at == 0 || s.find('@', at + 1) != std::string_view::npos) return false;
    auto domain = s.substr(at + 1);
    auto dot = domain.find('.');
    if (dot == std::string_view::npos || dot == 0 || domain.back() == '.') return false;
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\n') return false;
    return true;
}

ValidationReport validate_kyc(const UserRegistrationData& data) {
    ValidationReport report;
    for (const auto& f : text_fields()) {
        if (!f.required_message.empty() && (data.*f.member).empty())
            report.failures.push_back({std::string(f.name), std::string(f.required_message)});
    }
    if (!data.dob.empty() && !is_iso_date(data.dob))
        report.failures.push_back({"dob", "Date of birth must use the YYYY-MM-DD format"});
    if (!data.idExpiry.empty() && !is_iso_date(data.idExpiry))
        report.failures.push_back({"idExpiry", "ID expiry date must use the YYYY-MM-DD format"});
    if (!data.email.empty() && !is_email_shaped(data.email))
        report.failures.push_back({"email", "Email must have a local part and a domain"});
    report.ok = report.failures.empty();
    return report;
}

KycToken derive_kyc_token(const Address& subject, const Digest& tx_id) {
    Writer w;
    w.fixed(subject).fixed(tx_id);
    return KycToken{crypto::sha256(kTokenLabel, w.data()), subject, tx_id};
}

bool token_matches(const KycToken& t) { return derive_kyc_token(t.subject, t.tx_id).token == t.token; }

Bytes EncryptedKycPayload::encode() const {
    Writer w;
    w.u8(kVersion).fixed(key_tag).raw(nonce).bytes(ciphertext);
    return std::move(w).take();
}

EncryptedKycPayload EncryptedKycPayload::decode(ByteView bytes) {
    Reader r(bytes);
    if (r.u8() != kVersion) throw DecodeError("unsupported KYC payload version");
    EncryptedKycPayload p;
    p.key_tag = r.fixed<PublicKey>();
    auto n = r.raw(p.nonce.size());
    std::copy(n.begin(), n.end(), p.nonce.begin());
    p.ciphertext = r.bytes();
    r.expect_done();
    return p;
}

crypto::SecretSeed wallet_kyc_secret(const Wallet& wallet) {
    return derive_x25519_secret(wallet.private_key, "albank/wallet-kyc/v1");
}

crypto::SecretSeed node_kyc_secret(const crypto::SecretSeed& node_seed) {
    return derive_x25519_secret(node_seed, "albank/node-kyc/v1");
}

EncryptedKycPayload encrypt_payload(const Wallet& wallet, const PublicKey& node_kyc_key,
                                    const KycSubmission& submission,
                                    std::optional<std::array<std::uint8_t, crypto::kAeadNonceSize>> nonce) {
    const auto secret = wallet_kyc_secret(wallet);
    EncryptedKycPayload p;
    p.key_tag = crypto::x25519_public_key(secret);
    if (nonce) {
        p.nonce = *nonce;
    } else {
        auto r = crypto::random_bytes(p.nonce.size());
        std::copy(r.begin(), r.end(), p.nonce.begin());
    }
    const auto shared = crypto::x25519_shared(secret, node_kyc_key);
    const auto key = aead_key(shared, wallet.address, p.key_tag, node_kyc_key);
    p.ciphertext = crypto::aead_seal(key, p.nonce, wallet.address.view(), submission.encode());
    return p;
}

KycSubmission decrypt_payload(const Wallet& wallet, const PublicKey& node_kyc_key, const EncryptedKycPayload& payload) {
    const auto secret = wallet_kyc_secret(wallet);
    const auto own_tag = crypto::x25519_public_key(secret);
    try {
        const auto shared = crypto::x25519_shared(secret, node_kyc_key);
        return open_with(shared, wallet.address, own_tag, node_kyc_key, payload);
    } catch (const crypto::CryptoError& e) {
        throw KycError(KycError::Code::DecryptionFailed, e.what());
    }
}

KycSubmission open_payload(const crypto::SecretSeed& node_secret, const Address& sender,
                           const EncryptedKycPayload& payload) {
    const auto node_key = crypto::x25519_public_key(node_secret);
    try {
        const auto shared = crypto::x25519_shared(node_secret, payload.key_tag);
        return open_with(shared, sender, payload.key_tag, node_key, payload);
    } catch (const crypto::CryptoError& e) {
        throw KycError(KycError::Code::DecryptionFailed, e.what());
    }
}

} // namespace albank
