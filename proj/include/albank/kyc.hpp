#pragma once

// KYC building blocks that need no node: record validation, token
// derivation and payload encryption.
//
// A RegisterKyc payload is sealed to the bank node rather than published in
// the clear. The wallet derives a static X25519 key from its signing key
// (labeled HKDF), agrees a secret with the node's X25519 key, and seals the
// record with ChaCha20-Poly1305 under an HKDF of that secret bound to the
// sender address. Either end of the pair can open it; nobody else can.

#include "albank/bankvm.hpp"
#include "albank/wallet.hpp"

#include <optional>
#include <string>
#include <vector>

namespace albank {

struct FieldFailure {
    std::string field;
    std::string message;

    friend bool operator==(const FieldFailure&, const FieldFailure&) = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<FieldFailure> failures;
};

/// Every rule, every failure: the twelve required fields in declaration
/// order, then the dob / idExpiry date shape and the email shape.
ValidationReport validate_kyc(const UserRegistrationData& data);

/// YYYY-MM-DD naming a real calendar date.
bool is_iso_date(std::string_view text);
/// Non-empty local part, '@', and a dotted domain.
bool is_email_shaped(std::string_view text);

struct KycToken {
    Digest token;
    Address subject;
    Digest tx_id;

    friend bool operator==(const KycToken&, const KycToken&) = default;
};

/// SHA-256 over a domain label, the subject address and the tx id.
KycToken derive_kyc_token(const Address& subject, const Digest& tx_id);
bool token_matches(const KycToken& t);

struct EncryptedKycPayload {
    static constexpr std::uint8_t kVersion = 1;

    /// Sender's X25519 public key; identifies the derivation inputs.
    PublicKey key_tag;
    std::array<std::uint8_t, crypto::kAeadNonceSize> nonce{};
    Bytes ciphertext;

    Bytes encode() const;
    static EncryptedKycPayload decode(ByteView bytes);

    friend bool operator==(const EncryptedKycPayload&, const EncryptedKycPayload&) = default;
};

class KycError : public std::runtime_error {
public:
    enum class Code { ValidationFailed, UserRejected, AlreadyRegistered, NotFound, InvalidAddress, DecryptionFailed };

    KycError(Code code, const std::string& what, ValidationReport report = {})
        : std::runtime_error(what), code_(code), report_(std::move(report)) {}
    Code code() const { return code_; }
    const ValidationReport& report() const { return report_; }

private:
    Code code_;
    ValidationReport report_;
};

/// Static X25519 secret of a wallet, derived from its signing key.
crypto::SecretSeed wallet_kyc_secret(const Wallet& wallet);
/// Static X25519 secret of a node, derived from its seed.
crypto::SecretSeed node_kyc_secret(const crypto::SecretSeed& node_seed);

/// `nonce` is random when not given.
EncryptedKycPayload encrypt_payload(const Wallet& wallet, const PublicKey& node_kyc_key,
                                    const KycSubmission& submission,
                                    std::optional<std::array<std::uint8_t, crypto::kAeadNonceSize>> nonce = {});

/// Wallet-side decryption. Throws KycError{DecryptionFailed}.
KycSubmission decrypt_payload(const Wallet& wallet, const PublicKey& node_kyc_key, const EncryptedKycPayload& payload);

/// Node-side decryption. Throws KycError{DecryptionFailed}.
KycSubmission open_payload(const crypto::SecretSeed& node_kyc_secret, const Address& sender,
                           const EncryptedKycPayload& payload);

} // namespace albank
