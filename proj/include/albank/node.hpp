#pragma once

#include "albank/api.hpp"
#include "albank/bankvm.hpp"
#include "albank/chain.hpp"
#include "albank/clock.hpp"
#include "albank/kyc.hpp"
#include "albank/wallet.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>

namespace albank {

struct NodeConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8645;
    /// Empty: keep the chain in memory only.
    std::filesystem::path chain_file;
    /// Defaults to chain_file + ".key". Ignored for in-memory nodes, which
    /// draw a fresh key.
    std::filesystem::path key_file;
    Wei gas_price = 1'000'000'000;  // 1 gwei
    std::chrono::seconds token_lifetime{3600};
    std::chrono::seconds nonce_lifetime{300};
    /// When set the node runs on a FixedClock frozen at this wall time.
    std::optional<std::int64_t> fixed_clock_ms;

    /// Throws std::invalid_argument.
    void validate() const;

    /// Keys: host, port, chain_file, key_file, gas_price (decimal wei string),
    /// token_lifetime_s, nonce_lifetime_s, fixed_clock_ms. Throws
    /// std::invalid_argument.
    static NodeConfig from_json(const nlohmann::json& j);
    static NodeConfig load(const std::filesystem::path& path);
    /// ALBANK_HOST, ALBANK_PORT, ALBANK_CHAIN_FILE, ALBANK_KEY_FILE,
    /// ALBANK_GAS_PRICE, ALBANK_TOKEN_TTL, ALBANK_NONCE_TTL.
    void apply_env();
};

class NodeStartError : public std::runtime_error {
public:
    enum class Code { CorruptChainFile, PortInUse, IoError, BadConfig };

    NodeStartError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

/// Per-function aggregate of executed receipts, served at /metrics.
struct FunctionMetrics {
    std::uint64_t count = 0;
    std::uint64_t failures = 0;
    std::uint64_t total_gas = 0;
    double total_elapsed_ms = 0;
    Wei total_fee = 0;
};

/// Single-authority bank node: sequences signed transactions into the
/// contract, seals each one into its own block, and persists blocks before
/// acknowledging them. Writes are serialized; reads share the last sealed
/// state.
class Node final : public NodeApi {
public:
    /// Starts from genesis when the chain file is absent, otherwise loads,
    /// verifies and replays it. Throws NodeStartError.
    explicit Node(NodeConfig config, std::shared_ptr<const Clock> clock = nullptr);

    NodeInfo info() override;
    Challenge challenge(const Address& address) override;
    SessionGrant login(const Address& address, const PublicKey& key, const NonceValue& nonce,
                       const Signature& signature) override;
    std::uint64_t next_sequence(const Address& address) override;

    Receipt add_customer(const std::string& session, const Transaction& tx) override;
    KycSubmitResult submit_kyc(const std::string& session, const Transaction& tx) override;
    Receipt deposit(const std::string& session, const Transaction& tx) override;
    Receipt withdraw(const std::string& session, const Transaction& tx) override;

    KycRecord fetch_kyc(const std::string& handle) override;
    BalanceView balance(const Address& address) override;
    TxRecord transaction(const Digest& tx_id) override;
    IntegrityReport verify() override;

    /// Executes and seals a transaction, reverted or not. Throws
    /// ApiError(401|409|503) when the transaction is not admissible or
    /// cannot be persisted.
    Receipt sequence(const Transaction& tx);

    std::map<std::string, FunctionMetrics> metrics() const;

    /// Copies of live state, for tests and tooling.
    ContractState contract_state() const;
    std::size_t chain_length() const;
    Chain chain_snapshot() const;

    const NodeConfig& config() const { return config_; }
    const Clock& clock() const { return *clock_; }

    /// Chain file is fsynced per block, so there is nothing to flush; this
    /// re-verifies the on-disk file.
    void shutdown();

private:
    Address authenticate(const std::string& session, const Transaction& tx, Operation expected) const;
    Receipt sequence_locked(const Transaction& tx);
    void apply_receipt(const Transaction& tx, const Receipt& r);
    Receipt write(const std::string& session, const Transaction& tx, Operation op);
    void load_or_create_key();
    void replay();

    NodeConfig config_;
    std::shared_ptr<const Clock> clock_;
    crypto::SecretSeed node_seed_{};
    crypto::SecretSeed kyc_secret_{};
    Address owner_;

    std::unique_ptr<TokenAuthority> tokens_;
    std::unique_ptr<Authenticator> auth_;

    mutable std::shared_mutex mu_;
    Chain chain_;
    std::unique_ptr<BankVm> vm_;
    std::map<Digest, Receipt> receipts_;
    std::map<Digest, KycToken> kyc_tokens_;
    std::map<Address, Digest> kyc_tx_by_subject_;
    std::map<std::string, FunctionMetrics> metrics_;
    bool write_failed_ = false;
};

/// Benchmark-table display name of an operation ("Add Customer", "Deposit ETH", ...).
std::string function_display_name(std::uint8_t op);

} // namespace albank
