#pragma once

// Wallet-side flows over any NodeApi: login, signing and submitting bank
// operations, and the KYC workflow (validate, approve, encrypt, submit,
// receive a token).

#include "albank/api.hpp"
#include "albank/kyc.hpp"
#include "albank/wallet.hpp"

#include <functional>
#include <optional>
#include <string>

namespace albank {

/// Asked once with the validated record; false ends the flow with no
/// transaction sent.
using KycApproval = std::function<bool(const UserRegistrationData&)>;

/// Throws KycError{ValidationFailed|UserRejected|AlreadyRegistered}; other
/// node failures surface as ApiError.
KycSubmitResult submit_kyc(NodeApi& api, const std::string& session, const Wallet& wallet,
                           const KycSubmission& submission, const KycApproval& approve);

/// Zero-gas read by token, tx id or address. Throws
/// KycError{NotFound|InvalidAddress}.
KycRecord fetch_kyc(NodeApi& api, const std::string& handle);

/// A logged-in wallet. Each write fetches the next sequence number, signs
/// and submits; reverts surface as ApiError(422) carrying the receipt.
class BankClient {
public:
    BankClient(NodeApi& api, Wallet wallet) : api_(api), wallet_(std::move(wallet)) {}

    /// Challenge-response login; keeps the session for later calls.
    const SessionGrant& login();
    /// Reuse a session obtained earlier.
    void set_session(std::string token) { session_ = std::move(token); }
    const std::string& session() const { return session_; }

    Receipt add_customer();
    KycSubmitResult submit_kyc(const KycSubmission& submission, const KycApproval& approve);
    Receipt deposit(const Wei& amount);
    Receipt withdraw(const Wei& amount);
    BalanceView balance();

    const Wallet& wallet() const { return wallet_; }
    NodeApi& api() { return api_; }

private:
    Transaction sign(Operation op, const Wei& value, Bytes payload);

    NodeApi& api_;
    Wallet wallet_;
    std::string session_;
    std::optional<SessionGrant> grant_;
};

} // namespace albank
