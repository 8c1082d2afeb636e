#include "albank/client.hpp"

namespace albank {

SessionGrant login_with_wallet(NodeApi& api, const Wallet& wallet) {
    auto c = api.challenge(wallet.address);
    return api.login(wallet.address, wallet.public_key, c.nonce, sign_nonce(wallet, c.nonce));
}

KycSubmitResult submit_kyc(NodeApi& api, const std::string& session, const Wallet& wallet,
                           const KycSubmission& submission, const KycApproval& approve) {
    auto report = validate_kyc(submission.data);
    if (!report.ok) {
        auto message = report.failures.front().message;
        throw KycError(KycError::Code::ValidationFailed, message, std::move(report));
    }
    if (!approve || !approve(submission.data))
        throw KycError(KycError::Code::UserRejected, "KYC submission rejected by the user");

    auto info = api.info();
    auto payload = encrypt_payload(wallet, info.kyc_key, submission).encode();
    auto tx = wallet.sign_transaction(Operation::RegisterKyc, 0, std::move(payload),
                                      api.next_sequence(wallet.address));
    try {
        auto result = api.submit_kyc(session, tx);
        if (!token_matches(result.token) || result.token.subject != wallet.address || result.token.tx_id != tx.tx_id)
            throw std::runtime_error("node returned a KYC token that does not match the submission");
        return result;
    } catch (const ApiError& e) {
        if (e.code() == vm_error_name(VmErrorCode::AlreadyRegistered))
            throw KycError(KycError::Code::AlreadyRegistered, e.what());
        if (e.code() == "ValidationFailed")
            throw KycError(KycError::Code::ValidationFailed, e.what(), e.report.value_or(ValidationReport{}));
        throw;
    }
}

KycRecord fetch_kyc(NodeApi& api, const std::string& handle) {
    try {
        return api.fetch_kyc(handle);
    } catch (const ApiError& e) {
        if (e.code() == "InvalidAddress") throw KycError(KycError::Code::InvalidAddress, e.what());
        if (e.status() == 404) throw KycError(KycError::Code::NotFound, e.what());
        throw;
    }
}

const SessionGrant& BankClient::login() {
    grant_ = login_with_wallet(api_, wallet_);
    session_ = grant_->token;
    return *grant_;
}

Transaction BankClient::sign(Operation op, const Wei& value, Bytes payload) {
    return wallet_.sign_transaction(op, value, std::move(payload), api_.next_sequence(wallet_.address));
}

Receipt BankClient::add_customer() { return api_.add_customer(session_, sign(Operation::AddCustomer, 0, {})); }

KycSubmitResult BankClient::submit_kyc(const KycSubmission& submission, const KycApproval& approve) {
    return albank::submit_kyc(api_, session_, wallet_, submission, approve);
}

Receipt BankClient::deposit(const Wei& amount) { return api_.deposit(session_, sign(Operation::Deposit, amount, {})); }

Receipt BankClient::withdraw(const Wei& amount) {
    return api_.withdraw(session_, sign(Operation::Withdraw, 0, encode_withdraw_payload(amount)));
}

BalanceView BankClient::balance() { return api_.balance(wallet_.address); }

} // namespace albank
