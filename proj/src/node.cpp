#include "albank/node.hpp"

#include "albank/json_codec.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <mutex>

namespace albank {

namespace {

constexpr std::uint8_t kNodeKeyVersion = 1;

[[noreturn]] void rethrow_chain(const ChainError& e) {
    switch (e.code()) {
    case ChainError::Code::InvalidSignature: throw ApiError(401, "InvalidSignature", e.what());
    case ChainError::Code::StaleSequence: throw ApiError(409, "StaleSequence", e.what());
    case ChainError::Code::NotFound: throw ApiError(404, "NotFound", e.what());
    case ChainError::Code::CorruptFile:
    case ChainError::Code::IoError: throw ApiError(503, "PersistenceFailure", e.what());
    }
    throw ApiError(500, "Internal", e.what());
}

[[noreturn]] void rethrow_auth(const AuthError& e) { throw ApiError(401, auth_error_name(e.code()), e.what()); }

ApiError revert_error(const Receipt& r) {
    ApiError e(422, vm_error_name(r.error), r.error_message);
    e.receipt = r;
    return e;
}

std::optional<std::string> env(const char* name) {
    if (const char* v = std::getenv(name); v && *v) return std::string(v);
    return std::nullopt;
}

} // namespace

std::string function_display_name(std::uint8_t op) {
    switch (static_cast<Operation>(op)) {
    case Operation::AddCustomer: return "Add Customer";
    case Operation::RegisterKyc: return "Add KYC Customer Data";
    case Operation::Deposit: return "Deposit ETH";
    case Operation::Withdraw: return "Withdraw ETH";
    }
    return operation_name(op);
}

void NodeConfig::validate() const {
    if (gas_price == 0) throw std::invalid_argument("gas_price must be positive");
    if (token_lifetime.count() <= 0) throw std::invalid_argument("token lifetime must be positive");
    if (nonce_lifetime.count() <= 0) throw std::invalid_argument("nonce lifetime must be positive");
}

NodeConfig NodeConfig::from_json(const nlohmann::json& j) try {
    NodeConfig c;
    if (j.contains("host")) c.host = j.at("host").get<std::string>();
    if (j.contains("port")) c.port = j.at("port").get<std::uint16_t>();
    if (j.contains("chain_file")) c.chain_file = j.at("chain_file").get<std::string>();
    if (j.contains("key_file")) c.key_file = j.at("key_file").get<std::string>();
    if (j.contains("gas_price")) c.gas_price = parse_wei(j.at("gas_price").get<std::string>());
    if (j.contains("token_lifetime_s")) c.token_lifetime = std::chrono::seconds(j.at("token_lifetime_s").get<std::int64_t>());
    if (j.contains("nonce_lifetime_s")) c.nonce_lifetime = std::chrono::seconds(j.at("nonce_lifetime_s").get<std::int64_t>());
    if (j.contains("fixed_clock_ms")) c.fixed_clock_ms = j.at("fixed_clock_ms").get<std::int64_t>();
    return c;
} catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(e.what());
}

NodeConfig NodeConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("config " + path.string() + " is not valid JSON");
    return from_json(j);
}

void NodeConfig::apply_env() {
    if (auto v = env("ALBANK_HOST")) host = *v;
    if (auto v = env("ALBANK_PORT")) port = static_cast<std::uint16_t>(std::stoul(*v));
    if (auto v = env("ALBANK_CHAIN_FILE")) chain_file = *v;
    if (auto v = env("ALBANK_KEY_FILE")) key_file = *v;
    if (auto v = env("ALBANK_GAS_PRICE")) gas_price = parse_wei(*v);
    if (auto v = env("ALBANK_TOKEN_TTL")) token_lifetime = std::chrono::seconds(std::stoll(*v));
    if (auto v = env("ALBANK_NONCE_TTL")) nonce_lifetime = std::chrono::seconds(std::stoll(*v));
}

Node::Node(NodeConfig config, std::shared_ptr<const Clock> clock)
    : config_(std::move(config)), clock_(std::move(clock)), chain_(Chain::genesis()) {
    try {
        config_.validate();
    } catch (const std::invalid_argument& e) {
        throw NodeStartError(NodeStartError::Code::BadConfig, e.what());
    }
    if (!clock_) {
        if (config_.fixed_clock_ms) {
            clock_ = std::make_shared<FixedClock>(*config_.fixed_clock_ms);
        } else {
            clock_ = std::make_shared<SystemClock>();
        }
    }

    const bool persistent = !config_.chain_file.empty();
    const bool resuming = persistent && std::filesystem::exists(config_.chain_file);
    if (persistent && config_.key_file.empty()) {
        config_.key_file = config_.chain_file;
        config_.key_file += ".key";
    }
    if (resuming && !std::filesystem::exists(config_.key_file))
        throw NodeStartError(NodeStartError::Code::IoError,
                             "chain file exists but node key " + config_.key_file.string() + " is missing");
    load_or_create_key();

    owner_ = address_of(crypto::ed25519_public_key(node_seed_));
    kyc_secret_ = node_kyc_secret(node_seed_);
    tokens_ = std::make_unique<TokenAuthority>(node_seed_, config_.token_lifetime, *clock_);
    auth_ = std::make_unique<Authenticator>(*tokens_, config_.nonce_lifetime, *clock_);

    vm_ = std::make_unique<BankVm>(owner_, config_.gas_price, *clock_);
    vm_->set_payload_opener([secret = kyc_secret_](const Transaction& tx) {
        auto payload = EncryptedKycPayload::decode(tx.payload);
        try {
            return open_payload(secret, tx.sender, payload);
        } catch (const KycError& e) {
            throw DecodeError(e.what());
        }
    });

    if (resuming) {
        try {
            chain_ = load_chain(config_.chain_file);
        } catch (const ChainError& e) {
            if (e.code() == ChainError::Code::CorruptFile)
                throw NodeStartError(NodeStartError::Code::CorruptChainFile, e.what());
            throw NodeStartError(NodeStartError::Code::IoError, e.what());
        }
        replay();
    } else if (persistent) {
        try {
            save_chain(chain_, config_.chain_file);
        } catch (const ChainError& e) {
            throw NodeStartError(NodeStartError::Code::IoError, e.what());
        }
    }
}

void Node::load_or_create_key() {
    if (config_.chain_file.empty()) {
        auto r = crypto::random_bytes(node_seed_.size());
        std::copy(r.begin(), r.end(), node_seed_.begin());
        return;
    }
    if (std::filesystem::exists(config_.key_file)) {
        std::ifstream in(config_.key_file, std::ios::binary);
        Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (data.size() != 1 + node_seed_.size() || data[0] != kNodeKeyVersion)
            throw NodeStartError(NodeStartError::Code::IoError, "malformed node key " + config_.key_file.string());
        std::copy(data.begin() + 1, data.end(), node_seed_.begin());
        return;
    }
    auto r = crypto::random_bytes(node_seed_.size());
    std::copy(r.begin(), r.end(), node_seed_.begin());
    Bytes data{kNodeKeyVersion};
    data.insert(data.end(), node_seed_.begin(), node_seed_.end());
    int fd = ::open(config_.key_file.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0600);
    if (fd < 0) throw NodeStartError(NodeStartError::Code::IoError, "cannot create " + config_.key_file.string());
    auto n = ::write(fd, data.data(), data.size());
    ::fsync(fd);
    ::close(fd);
    if (n != static_cast<ssize_t>(data.size()))
        throw NodeStartError(NodeStartError::Code::IoError, "short write to " + config_.key_file.string());
}

void Node::replay() {
    for (const auto& block : chain_.blocks())
        for (const auto& tx : block.txs) apply_receipt(tx, vm_->execute(tx));
}

void Node::apply_receipt(const Transaction& tx, const Receipt& r) {
    receipts_[tx.tx_id] = r;
    auto& m = metrics_[function_display_name(tx.operation)];
    ++m.count;
    if (!r.success) ++m.failures;
    m.total_gas += r.gas_used;
    m.total_elapsed_ms += r.elapsed_ms;
    m.total_fee += r.network_fee;

    if (r.success && tx.operation == static_cast<std::uint8_t>(Operation::RegisterKyc)) {
        auto token = derive_kyc_token(tx.sender, tx.tx_id);
        kyc_tokens_[token.token] = token;
        kyc_tx_by_subject_[tx.sender] = tx.tx_id;
    }
}

Receipt Node::sequence_locked(const Transaction& tx) {
    if (write_failed_) throw ApiError(503, "PersistenceFailure", "node stopped accepting writes after a storage error");
    Block candidate;
    try {
        candidate = chain_.prepare_block({tx}, *clock_);
    } catch (const ChainError& e) {
        rethrow_chain(e);
    }
    if (!config_.chain_file.empty()) {
        try {
            append_chain_record(config_.chain_file, candidate);
        } catch (const ChainError& e) {
            write_failed_ = true;
            rethrow_chain(e);
        }
    }
    chain_.commit(std::move(candidate));
    auto receipt = vm_->execute(tx);
    apply_receipt(tx, receipt);
    return receipt;
}

Receipt Node::sequence(const Transaction& tx) {
    std::unique_lock lock(mu_);
    return sequence_locked(tx);
}

Address Node::authenticate(const std::string& session, const Transaction& tx, Operation expected) const {
    Address subject;
    try {
        subject = tokens_->authenticate(session);
    } catch (const AuthError& e) {
        rethrow_auth(e);
    }
    if (tx.operation != static_cast<std::uint8_t>(expected))
        throw ApiError(400, "WrongOperation",
                       "endpoint expects " + operation_name(static_cast<std::uint8_t>(expected)) + " but got " +
                           operation_name(tx.operation));
    if (tx.sender != subject) throw ApiError(401, "SenderMismatch", "transaction sender is not the session subject");
    return subject;
}

Receipt Node::write(const std::string& session, const Transaction& tx, Operation op) {
    authenticate(session, tx, op);
    auto r = sequence(tx);
    if (!r.success) throw revert_error(r);
    return r;
}

Receipt Node::add_customer(const std::string& session, const Transaction& tx) {
    return write(session, tx, Operation::AddCustomer);
}

Receipt Node::deposit(const std::string& session, const Transaction& tx) {
    return write(session, tx, Operation::Deposit);
}

Receipt Node::withdraw(const std::string& session, const Transaction& tx) {
    return write(session, tx, Operation::Withdraw);
}

KycSubmitResult Node::submit_kyc(const std::string& session, const Transaction& tx) {
    authenticate(session, tx, Operation::RegisterKyc);
    std::unique_lock lock(mu_);
    try {
        chain_.check_admissible(tx);
    } catch (const ChainError& e) {
        rethrow_chain(e);
    }

    // Node-side validation of what the contract will see. Undecryptable
    // payloads are left to the contract, which reverts them on-chain.
    std::optional<KycSubmission> opened;
    try {
        opened = open_payload(kyc_secret_, tx.sender, EncryptedKycPayload::decode(tx.payload));
    } catch (const std::exception&) {
    }
    if (opened) {
        auto report = validate_kyc(opened->data);
        if (!report.ok) {
            ApiError e(422, "ValidationFailed", report.failures.front().message);
            e.report = std::move(report);
            throw e;
        }
    }

    auto r = sequence_locked(tx);
    if (!r.success) throw revert_error(r);
    return KycSubmitResult{r, derive_kyc_token(tx.sender, tx.tx_id)};
}

NodeInfo Node::info() {
    std::shared_lock lock(mu_);
    return NodeInfo{crypto::ed25519_public_key(node_seed_), crypto::x25519_public_key(kyc_secret_), owner_,
                    config_.gas_price, chain_.head().height, chain_.blocks().front().block_hash};
}

Challenge Node::challenge(const Address& address) {
    auto n = auth_->issue_nonce(address);
    return Challenge{n.value, n.issued_at + std::chrono::duration_cast<std::chrono::milliseconds>(
                                                config_.nonce_lifetime).count()};
}

SessionGrant Node::login(const Address& address, const PublicKey& key, const NonceValue& nonce,
                         const Signature& signature) {
    try {
        auto t = auth_->verify_login(address, nonce, key, signature);
        return SessionGrant{t.encode(), t.subject, t.expires_at};
    } catch (const AuthError& e) {
        rethrow_auth(e);
    }
}

std::uint64_t Node::next_sequence(const Address& address) {
    std::shared_lock lock(mu_);
    return chain_.last_sequence(address) + 1;
}

KycRecord Node::fetch_kyc(const std::string& handle) {
    Bytes raw;
    try {
        raw = from_hex(handle);
    } catch (const std::invalid_argument&) {
        throw ApiError(400, "BadHandle", "KYC handle must be a hex token, transaction id or address");
    }

    std::shared_lock lock(mu_);
    Address subject;
    if (raw.size() == Address::size) {
        subject = Address::from(raw);
    } else if (raw.size() == Digest::size) {
        const auto id = Digest::from(raw);
        auto loc = chain_.locate(id);
        auto rec = receipts_.find(id);
        if (loc && rec != receipts_.end() && rec->second.success &&
            chain_.get_transaction(id).tx.operation == static_cast<std::uint8_t>(Operation::RegisterKyc)) {
            subject = chain_.get_transaction(id).tx.sender;
        } else if (auto t = kyc_tokens_.find(id); t != kyc_tokens_.end()) {
            subject = t->second.subject;
        } else {
            throw ApiError(404, "NotFound", "no KYC record for handle " + handle);
        }
    } else {
        throw ApiError(400, "BadHandle", "KYC handle must be a hex token, transaction id or address");
    }

    KycRecord out;
    try {
        auto view = vm_->get_user(subject);
        out.data = view.value;
        out.gas_used = view.gas_used;
        out.network_fee = view.network_fee;
    } catch (const VmError& e) {
        if (e.code() == VmErrorCode::InvalidAddress) throw ApiError(422, "InvalidAddress", e.what());
        throw ApiError(404, "NoSuchUser", e.what());
    }
    out.subject = subject;
    if (auto it = kyc_tx_by_subject_.find(subject); it != kyc_tx_by_subject_.end()) out.tx_id = it->second;
    out.id_file_digest = vm_->id_document(subject);
    return out;
}

BalanceView Node::balance(const Address& address) {
    std::shared_lock lock(mu_);
    auto v = vm_->get_balance(address);
    return BalanceView{address, v.value, v.gas_used, v.network_fee};
}

TxRecord Node::transaction(const Digest& tx_id) {
    std::shared_lock lock(mu_);
    try {
        auto found = chain_.get_transaction(tx_id);
        TxRecord out{found.tx, found.location, std::nullopt};
        if (auto it = receipts_.find(tx_id); it != receipts_.end()) out.receipt = it->second;
        return out;
    } catch (const ChainError& e) {
        rethrow_chain(e);
    }
}

IntegrityReport Node::verify() {
    std::shared_lock lock(mu_);
    return verify_chain(chain_);
}

std::map<std::string, FunctionMetrics> Node::metrics() const {
    std::shared_lock lock(mu_);
    return metrics_;
}

ContractState Node::contract_state() const {
    std::shared_lock lock(mu_);
    return vm_->state();
}

std::size_t Node::chain_length() const {
    std::shared_lock lock(mu_);
    return chain_.size();
}

Chain Node::chain_snapshot() const {
    std::shared_lock lock(mu_);
    return chain_;
}

void Node::shutdown() {
    std::unique_lock lock(mu_);
    if (!config_.chain_file.empty()) load_chain(config_.chain_file);
}

} // namespace albank
