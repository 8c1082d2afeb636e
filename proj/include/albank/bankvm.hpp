#pragma once

// Deterministic re-implementation of the CombinedBankWithKYC contract:
// customer roster, write-once KYC records, deposits and reentrancy-guarded
// withdrawals, with gas metering and on-chain style revert semantics.

#include "albank/amount.hpp"
#include "albank/chain.hpp"
#include "albank/clock.hpp"
#include "albank/encoding.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace albank {

struct UserRegistrationData {
    std::string firstName;
    std::string middleName;
    std::string lastName;
    std::string dob;
    std::string email;
    std::string phone;
    std::string maritalStatus;
    std::string address_;
    std::string city;
    std::string state;
    std::string country;
    std::string zip;
    std::string nationality;
    std::string occupation;
    std::string employmentStatus;
    std::uint64_t annualIncome = 0;
    std::string idType;
    std::string idNumber;
    std::string idExpiry;

    void encode(Writer& w) const;
    static UserRegistrationData decode(Reader& r);

    friend bool operator==(const UserRegistrationData&, const UserRegistrationData&) = default;
};

/// One text field of UserRegistrationData. `required_message` is empty for
/// optional fields.
struct TextField {
    std::string_view name;
    std::string UserRegistrationData::*member;
    std::string_view required_message;
};

/// The eighteen text fields in declaration order (annualIncome is the
/// nineteenth field and sits between employmentStatus and idType).
const std::array<TextField, 18>& text_fields();

/// Plaintext body of a RegisterKyc transaction: the record plus an optional
/// digest of the uploaded ID document.
struct KycSubmission {
    UserRegistrationData data;
    std::optional<Digest> id_file_digest;

    Bytes encode() const;
    static KycSubmission decode(ByteView bytes);

    friend bool operator==(const KycSubmission&, const KycSubmission&) = default;
};

enum class EventName { UserRegistered, Deposit, Withdrawal, GasConsumption, ElapsedTime };
std::string event_name(EventName e);

using EventArg = std::variant<Address, Wei>;

struct Event {
    EventName name;
    std::vector<EventArg> args;

    friend bool operator==(const Event&, const Event&) = default;
};

enum class VmErrorCode {
    None,
    AlreadyCustomer,
    FieldRequired,
    AlreadyRegistered,
    InvalidAddress,
    NoSuchUser,
    DepositTooSmall,
    InsufficientBalance,
    ReentrantCall,
    UnknownOperation,
    DecodeError,
    NotPayable,
    Overflow,
    TransferFailed,
};

std::string vm_error_name(VmErrorCode code);

namespace messages {
inline constexpr std::string_view kDepositTooSmall = "Please deposit at least 10 wei";
inline constexpr std::string_view kInsufficientBalance = "You do not have sufficient balance";
inline constexpr std::string_view kReentrantCall = "Reentrant call";
inline constexpr std::string_view kAlreadyRegistered = "User is already registered";
inline constexpr std::string_view kNoSuchUser = "User does not exist";
inline constexpr std::string_view kInvalidAddress = "Invalid address";
inline constexpr std::string_view kAlreadyCustomer = "Address is already a customer";
inline constexpr std::string_view kNotPayable = "Function does not accept value";
inline constexpr std::string_view kUnknownOperation = "Unknown operation";
inline constexpr std::string_view kOverflow = "Arithmetic overflow";
} // namespace messages

struct Receipt {
    Digest tx_id;
    bool success = false;
    std::vector<Event> events;
    std::uint64_t gas_used = 0;
    double elapsed_ms = 0;
    Wei network_fee = 0;
    VmErrorCode error = VmErrorCode::None;
    std::string error_message;

    friend bool operator==(const Receipt&, const Receipt&) = default;
};

/// Thrown by view calls, which have no receipt.
class VmError : public std::runtime_error {
public:
    VmError(VmErrorCode code, std::string_view message) : std::runtime_error(std::string(message)), code_(code) {}
    VmErrorCode code() const { return code_; }

private:
    VmErrorCode code_;
};

template <class T>
struct View {
    T value;
    std::uint64_t gas_used = 0;
    Wei network_fee = 0;
};

struct ContractState {
    Address owner;
    std::map<Address, Wei> userbalance;
    std::map<Address, UserRegistrationData> users;
    std::map<Address, Digest> id_documents;
    std::set<Address> customers;
    bool locked = false;
    Wei pool = 0;

    friend bool operator==(const ContractState&, const ContractState&) = default;
};

/// Gas charged per write transaction. Views cost nothing. A storage word is
/// "new" when a zero slot becomes non-zero and "overwritten" when a non-zero
/// slot is written again. Reverted calls pay base + payload only.
struct GasSchedule {
    static constexpr std::uint64_t kBase = 21'000;
    static constexpr std::uint64_t kNewWord = 20'000;
    static constexpr std::uint64_t kOverwriteWord = 5'000;
    static constexpr std::uint64_t kPayloadByte = 16;
    static constexpr std::uint64_t kView = 0;

    /// Solidity string layout: empty strings occupy no word, up to 31 bytes
    /// pack into one, longer strings use a length word plus the data words.
    static std::uint64_t string_words(std::string_view s);
    static std::uint64_t record_words(const KycSubmission& s);
};

class BankVm;

/// Called when withdraw sends value to the caller, after the debit and
/// before the Withdrawal event. It may call back into the VM.
using TransferHook = std::function<void(BankVm& vm, const Address& to, const Wei& amount)>;

/// Turns a RegisterKyc payload into its plaintext. Throws DecodeError (or any
/// std::exception) when the payload cannot be opened.
using PayloadOpener = std::function<KycSubmission(const Transaction& tx)>;

class BankVm {
public:
    BankVm(const Address& owner, const Wei& gas_price, const Clock& clock);

    Receipt add_customer(const Address& sender);
    Receipt register_user(const Address& sender, const UserRegistrationData& data,
                          std::optional<Digest> id_file_digest = std::nullopt);
    Receipt deposit(const Address& sender, const Wei& value);
    Receipt withdraw(const Address& sender, const Wei& amount);

    /// Throws VmError{InvalidAddress|NoSuchUser}.
    View<UserRegistrationData> get_user(const Address& queried) const;
    View<Wei> get_balance(const Address& sender) const;
    /// The stored ID-document digest, if the registration carried one.
    std::optional<Digest> id_document(const Address& user) const;

    /// Dispatches a sequenced transaction. Never throws for contract-level
    /// failures; they come back as a failed receipt.
    Receipt execute(const Transaction& tx);

    void set_transfer_hook(TransferHook hook) { hook_ = std::move(hook); }
    void set_payload_opener(PayloadOpener opener) { opener_ = std::move(opener); }

    const ContractState& state() const { return state_; }
    const Wei& gas_price() const { return gas_price_; }

private:
    struct Meter {
        std::uint64_t new_words = 0;
        std::uint64_t overwritten_words = 0;
    };
    struct Call {
        std::vector<Event> events;
        // deposit and withdraw close with GasConsumption and ElapsedTime
        bool metering_events = false;
    };
    using Body = std::function<void(Call&)>;

    Receipt run(const Digest& tx_id, std::size_t payload_bytes, const Body& body);

    [[noreturn]] static void revert(VmErrorCode code, std::string_view message);

    void do_add_customer(const Address& sender);
    void do_register(const Address& sender, const KycSubmission& s, Call& call);
    void do_deposit(const Address& sender, const Wei& value, Call& call);
    void do_withdraw(const Address& sender, const Wei& amount, Call& call);

    // Journaled mutators; every state change goes through one of these.
    void set_balance(const Address& a, const Wei& v);
    void set_pool(const Wei& v);
    void set_locked(bool v);
    void add_to_roster(const Address& a);
    void store_user(const Address& a, const KycSubmission& s);

    bool user_exists(const Address& a) const;

    ContractState state_;
    Wei gas_price_;
    const Clock& clock_;
    TransferHook hook_;
    PayloadOpener opener_;

    std::vector<std::function<void(ContractState&)>> journal_;
    std::vector<Meter> meters_;
};

/// Canonical Withdraw payload: the amount as uint256.
Bytes encode_withdraw_payload(const Wei& amount);

} // namespace albank
