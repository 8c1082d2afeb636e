#pragma once

// The node's operation set as an interface. Node implements it in-process;
// HttpNodeApi implements it over HTTP. Both report failures the same way, so
// the KYC flow, CLI and bench run unchanged against either.

#include "albank/bankvm.hpp"
#include "albank/chain.hpp"
#include "albank/kyc.hpp"
#include "albank/wallet.hpp"

#include <optional>
#include <string>

namespace albank {

/// Failure of an API call, carrying the HTTP status it maps to.
///
///   400 malformed request      401 authentication / signature
///   404 not found              409 stale or replayed sequence
///   422 contract revert or validation failure
///   503 node cannot persist
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, const std::string& message)
        : std::runtime_error(message), status_(status), code_(std::move(code)) {}

    int status() const { return status_; }
    const std::string& code() const { return code_; }

    /// Set for 422 reverts: the sealed, failed receipt.
    std::optional<Receipt> receipt;
    /// Set for ValidationFailed.
    std::optional<ValidationReport> report;

private:
    int status_;
    std::string code_;
};

struct NodeInfo {
    PublicKey node_key;
    PublicKey kyc_key;
    Address owner;
    Wei gas_price = 0;
    std::uint64_t height = 0;
    Digest genesis_hash;
};

struct Challenge {
    NonceValue nonce;
    std::int64_t expires_at = 0;
};

struct SessionGrant {
    std::string token;
    Address subject;
    std::int64_t expires_at = 0;
};

struct KycSubmitResult {
    Receipt receipt;
    KycToken token;
};

struct KycRecord {
    Address subject;
    std::optional<Digest> tx_id;
    UserRegistrationData data;
    std::optional<Digest> id_file_digest;
    std::uint64_t gas_used = 0;
    Wei network_fee = 0;
};

struct BalanceView {
    Address address;
    Wei balance = 0;
    std::uint64_t gas_used = 0;
    Wei network_fee = 0;
};

struct TxRecord {
    Transaction tx;
    TxLocation location;
    std::optional<Receipt> receipt;
};

class NodeApi {
public:
    virtual ~NodeApi() = default;

    virtual NodeInfo info() = 0;
    virtual Challenge challenge(const Address& address) = 0;
    virtual SessionGrant login(const Address& address, const PublicKey& key, const NonceValue& nonce,
                               const Signature& signature) = 0;
    virtual std::uint64_t next_sequence(const Address& address) = 0;

    // Writes: a session token plus a transaction signed by the token's
    // subject. A revert throws ApiError(422) with the receipt attached.
    virtual Receipt add_customer(const std::string& session, const Transaction& tx) = 0;
    virtual KycSubmitResult submit_kyc(const std::string& session, const Transaction& tx) = 0;
    virtual Receipt deposit(const std::string& session, const Transaction& tx) = 0;
    virtual Receipt withdraw(const std::string& session, const Transaction& tx) = 0;

    // Unauthenticated reads.
    /// Handle: KYC token, RegisterKyc tx id, or address (hex).
    virtual KycRecord fetch_kyc(const std::string& handle) = 0;
    virtual BalanceView balance(const Address& address) = 0;
    virtual TxRecord transaction(const Digest& tx_id) = 0;
    virtual IntegrityReport verify() = 0;
};

/// Runs the challenge-response login for a wallet.
SessionGrant login_with_wallet(NodeApi& api, const Wallet& wallet);

} // namespace albank
