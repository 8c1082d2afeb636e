#include "albank/bankvm.hpp"

#include <cmath>

namespace albank {

namespace {

struct RevertSignal {
    VmErrorCode code;
    std::string message;
};

constexpr std::size_t kWithdrawPayloadSize = 32;

} // namespace

const std::array<TextField, 18>& text_fields() {
    using U = UserRegistrationData;
    static const std::array<TextField, 18> fields = {{
        {"firstName", &U::firstName, "First name is required"},
        {"middleName", &U::middleName, ""},
        {"lastName", &U::lastName, "Last name is required"},
        {"dob", &U::dob, "Date of birth is required"},
        {"email", &U::email, "Email is required"},
        {"phone", &U::phone, "Phone number is required"},
        {"maritalStatus", &U::maritalStatus, ""},
        {"address_", &U::address_, "Address is required"},
        {"city", &U::city, "City is required"},
        {"state", &U::state, "State is required"},
        {"country", &U::country, "Country is required"},
        {"zip", &U::zip, "ZIP code is required"},
        {"nationality", &U::nationality, ""},
        {"occupation", &U::occupation, ""},
        {"employmentStatus", &U::employmentStatus, ""},
        {"idType", &U::idType, "ID type is required"},
        {"idNumber", &U::idNumber, "ID number is required"},
        {"idExpiry", &U::idExpiry, ""},
    }};
    return fields;
}

void UserRegistrationData::encode(Writer& w) const {
    w.string(firstName).string(middleName).string(lastName).string(dob).string(email).string(phone);
    w.string(maritalStatus).string(address_).string(city).string(state).string(country).string(zip);
    w.string(nationality).string(occupation).string(employmentStatus).u64(annualIncome);
    w.string(idType).string(idNumber).string(idExpiry);
}

UserRegistrationData UserRegistrationData::decode(Reader& r) {
    UserRegistrationData d;
    d.firstName = r.string();
    d.middleName = r.string();
    d.lastName = r.string();
    d.dob = r.string();
    d.email = r.string();
    d.phone = r.string();
    d.maritalStatus = r.string();
    d.address_ = r.string();
    d.city = r.string();
    d.state = r.string();
    d.country = r.string();
    d.zip = r.string();
    d.nationality = r.string();
    d.occupation = r.string();
    d.employmentStatus = r.string();
    d.annualIncome = r.u64();
    d.idType = r.string();
    d.idNumber = r.string();
    d.idExpiry = r.string();
    return d;
}

Bytes KycSubmission::encode() const {
    Writer w;
    data.encode(w);
    if (id_file_digest) {
        w.u8(1).fixed(*id_file_digest);
    } else {
        w.u8(0);
    }
    return std::move(w).take();
}

KycSubmission KycSubmission::decode(ByteView bytes) {
    Reader r(bytes);
    KycSubmission s;
    s.data = UserRegistrationData::decode(r);
    switch (r.u8()) {
    case 0: break;
    case 1: s.id_file_digest = r.fixed<Digest>(); break;
    default: throw DecodeError("bad id document flag");
    }
    r.expect_done();
    return s;
}

std::string event_name(EventName e) {
    switch (e) {
    case EventName::UserRegistered: return "UserRegistered";
    case EventName::Deposit: return "Deposit";
    case EventName::Withdrawal: return "Withdrawal";
    case EventName::GasConsumption: return "GasConsumption";
    case EventName::ElapsedTime: return "ElapsedTime";
    }
    return "Unknown";
}

std::string vm_error_name(VmErrorCode code) {
    switch (code) {
    case VmErrorCode::None: return "None";
    case VmErrorCode::AlreadyCustomer: return "AlreadyCustomer";
    case VmErrorCode::FieldRequired: return "FieldRequired";
    case VmErrorCode::AlreadyRegistered: return "AlreadyRegistered";
    case VmErrorCode::InvalidAddress: return "InvalidAddress";
    case VmErrorCode::NoSuchUser: return "NoSuchUser";
    case VmErrorCode::DepositTooSmall: return "DepositTooSmall";
    case VmErrorCode::InsufficientBalance: return "InsufficientBalance";
    case VmErrorCode::ReentrantCall: return "ReentrantCall";
    case VmErrorCode::UnknownOperation: return "UnknownOperation";
    case VmErrorCode::DecodeError: return "DecodeError";
    case VmErrorCode::NotPayable: return "NotPayable";
    case VmErrorCode::Overflow: return "Overflow";
    case VmErrorCode::TransferFailed: return "TransferFailed";
    }
    return "Unknown";
}

std::uint64_t GasSchedule::string_words(std::string_view s) {
    if (s.empty()) return 0;
    if (s.size() <= 31) return 1;
    return 1 + (s.size() + 31) / 32;
}

std::uint64_t GasSchedule::record_words(const KycSubmission& s) {
    std::uint64_t words = 0;
    for (const auto& f : text_fields()) words += string_words(s.data.*f.member);
    if (s.data.annualIncome != 0) ++words;
    if (s.id_file_digest) ++words;
    return words;
}

Bytes encode_withdraw_payload(const Wei& amount) {
    Writer w;
    w.uint256(amount);
    return std::move(w).take();
}

BankVm::BankVm(const Address& owner, const Wei& gas_price, const Clock& clock)
    : gas_price_(gas_price), clock_(clock) {
    state_.owner = owner;
}

void BankVm::revert(VmErrorCode code, std::string_view message) { throw RevertSignal{code, std::string(message)}; }

Receipt BankVm::run(const Digest& tx_id, std::size_t payload_bytes, const Body& body) {
    const auto checkpoint = journal_.size();
    meters_.emplace_back();
    const double started = clock_.steady_ms();

    Receipt r;
    r.tx_id = tx_id;
    Call call;
    auto rollback = [&] {
        while (journal_.size() > checkpoint) {
            journal_.back()(state_);
            journal_.pop_back();
        }
    };
    try {
        body(call);
        r.success = true;
    } catch (const RevertSignal& s) {
        r.error = s.code;
        r.error_message = s.message;
    } catch (const std::overflow_error&) {
        r.error = VmErrorCode::Overflow;
        r.error_message = messages::kOverflow;
    } catch (const std::range_error&) {
        r.error = VmErrorCode::Overflow;
        r.error_message = messages::kOverflow;
    } catch (const DecodeError& e) {
        r.error = VmErrorCode::DecodeError;
        r.error_message = std::string("Malformed payload: ") + e.what();
    } catch (...) {
        rollback();
        meters_.pop_back();
        if (meters_.empty()) journal_.clear();
        throw;
    }

    const Meter meter = meters_.back();
    meters_.pop_back();

    r.gas_used = GasSchedule::kBase + GasSchedule::kPayloadByte * payload_bytes;
    if (r.success) {
        r.gas_used += GasSchedule::kNewWord * meter.new_words + GasSchedule::kOverwriteWord * meter.overwritten_words;
    } else {
        rollback();
    }
    if (meters_.empty()) journal_.clear();

    r.elapsed_ms = std::max(0.0, clock_.steady_ms() - started);
    r.network_fee = Wei(r.gas_used) * gas_price_;
    if (r.success) {
        r.events = std::move(call.events);
        if (call.metering_events) {
            r.events.push_back({EventName::GasConsumption, {Wei(r.gas_used)}});
            r.events.push_back({EventName::ElapsedTime, {Wei(static_cast<std::uint64_t>(std::floor(r.elapsed_ms)))}});
        }
    }
    return r;
}

void BankVm::set_balance(const Address& a, const Wei& v) {
    auto it = state_.userbalance.find(a);
    const bool had = it != state_.userbalance.end();
    const Wei old = had ? it->second : Wei(0);
    if (old != 0) {
        ++meters_.back().overwritten_words;
    } else if (v != 0) {
        ++meters_.back().new_words;
    }
    journal_.push_back([a, had, old](ContractState& s) {
        if (had) {
            s.userbalance[a] = old;
        } else {
            s.userbalance.erase(a);
        }
    });
    state_.userbalance[a] = v;
}

void BankVm::set_pool(const Wei& v) {
    journal_.push_back([old = state_.pool](ContractState& s) { s.pool = old; });
    state_.pool = v;
}

void BankVm::set_locked(bool v) {
    journal_.push_back([old = state_.locked](ContractState& s) { s.locked = old; });
    state_.locked = v;
}

void BankVm::add_to_roster(const Address& a) {
    ++meters_.back().new_words;
    journal_.push_back([a](ContractState& s) { s.customers.erase(a); });
    state_.customers.insert(a);
}

void BankVm::store_user(const Address& a, const KycSubmission& sub) {
    meters_.back().new_words += GasSchedule::record_words(sub);
    journal_.push_back([a](ContractState& s) {
        s.users.erase(a);
        s.id_documents.erase(a);
    });
    state_.users[a] = sub.data;
    if (sub.id_file_digest) state_.id_documents[a] = *sub.id_file_digest;
}

bool BankVm::user_exists(const Address& a) const {
    auto it = state_.users.find(a);
    if (it == state_.users.end()) return false;
    const auto& u = it->second;
    return !u.firstName.empty() && !u.idType.empty() && !u.idNumber.empty();
}

void BankVm::do_add_customer(const Address& sender) {
    if (state_.customers.contains(sender)) revert(VmErrorCode::AlreadyCustomer, messages::kAlreadyCustomer);
    add_to_roster(sender);
}

void BankVm::do_register(const Address& sender, const KycSubmission& s, Call& call) {
    // onlyOnce
    if (auto it = state_.users.find(sender); it != state_.users.end()) {
        const auto& u = it->second;
        if (!u.firstName.empty() || !u.idType.empty() || !u.idNumber.empty())
            revert(VmErrorCode::AlreadyRegistered, messages::kAlreadyRegistered);
    }
    for (const auto& f : text_fields()) {
        if (!f.required_message.empty() && (s.data.*f.member).empty())
            revert(VmErrorCode::FieldRequired, f.required_message);
    }
    store_user(sender, s);
    call.events.push_back({EventName::UserRegistered, {sender}});
}

void BankVm::do_deposit(const Address& sender, const Wei& value, Call& call) {
    if (!(value > 10)) revert(VmErrorCode::DepositTooSmall, messages::kDepositTooSmall);
    set_balance(sender, get_balance(sender).value + value);
    set_pool(state_.pool + value);
    call.events.push_back({EventName::Deposit, {sender, value}});
    call.metering_events = true;
}

void BankVm::do_withdraw(const Address& sender, const Wei& amount, Call& call) {
    // nonReentrant
    if (state_.locked) revert(VmErrorCode::ReentrantCall, messages::kReentrantCall);
    set_locked(true);

    const Wei balance = get_balance(sender).value;
    if (!(amount <= balance)) revert(VmErrorCode::InsufficientBalance, messages::kInsufficientBalance);
    set_balance(sender, balance - amount);
    set_pool(state_.pool - amount);

    if (hook_) {
        try {
            hook_(*this, sender, amount);
        } catch (const std::exception& e) {
            revert(VmErrorCode::TransferFailed, std::string("Transfer failed: ") + e.what());
        }
    }
    call.events.push_back({EventName::Withdrawal, {sender, amount}});
    call.metering_events = true;
    set_locked(false);
}

Receipt BankVm::add_customer(const Address& sender) {
    return run(Digest{}, 0, [&](Call&) { do_add_customer(sender); });
}

Receipt BankVm::register_user(const Address& sender, const UserRegistrationData& data,
                              std::optional<Digest> id_file_digest) {
    KycSubmission s{data, id_file_digest};
    return run(Digest{}, s.encode().size(), [&](Call& c) { do_register(sender, s, c); });
}

Receipt BankVm::deposit(const Address& sender, const Wei& value) {
    return run(Digest{}, 0, [&](Call& c) { do_deposit(sender, value, c); });
}

Receipt BankVm::withdraw(const Address& sender, const Wei& amount) {
    return run(Digest{}, kWithdrawPayloadSize, [&](Call& c) { do_withdraw(sender, amount, c); });
}

View<UserRegistrationData> BankVm::get_user(const Address& queried) const {
    if (queried.is_zero()) throw VmError(VmErrorCode::InvalidAddress, messages::kInvalidAddress);
    if (!user_exists(queried)) throw VmError(VmErrorCode::NoSuchUser, messages::kNoSuchUser);
    return {state_.users.at(queried), GasSchedule::kView, 0};
}

View<Wei> BankVm::get_balance(const Address& sender) const {
    auto it = state_.userbalance.find(sender);
    return {it == state_.userbalance.end() ? Wei(0) : it->second, GasSchedule::kView, 0};
}

std::optional<Digest> BankVm::id_document(const Address& user) const {
    auto it = state_.id_documents.find(user);
    if (it == state_.id_documents.end()) return std::nullopt;
    return it->second;
}

Receipt BankVm::execute(const Transaction& tx) {
    const auto& sender = tx.sender;
    auto require_no_value = [&] {
        if (tx.value != 0) revert(VmErrorCode::NotPayable, messages::kNotPayable);
    };
    auto require_empty_payload = [&] {
        if (!tx.payload.empty()) throw DecodeError("operation takes no arguments");
    };

    return run(tx.tx_id, tx.payload.size(), [&](Call& c) {
        switch (static_cast<Operation>(tx.operation)) {
        case Operation::AddCustomer:
            require_no_value();
            require_empty_payload();
            do_add_customer(sender);
            return;
        case Operation::RegisterKyc: {
            require_no_value();
            if (!opener_) throw DecodeError("no payload opener configured");
            KycSubmission s;
            try {
                s = opener_(tx);
            } catch (const DecodeError&) {
                throw;
            } catch (const std::exception& e) {
                throw DecodeError(e.what());
            }
            do_register(sender, s, c);
            return;
        }
        case Operation::Deposit:
            require_empty_payload();
            do_deposit(sender, tx.value, c);
            return;
        case Operation::Withdraw: {
            require_no_value();
            if (tx.payload.size() != kWithdrawPayloadSize) throw DecodeError("withdraw payload must be 32 bytes");
            Reader r(tx.payload);
            do_withdraw(sender, r.uint256(), c);
            return;
        }
        }
        revert(VmErrorCode::UnknownOperation, messages::kUnknownOperation);
    });
}

} // namespace albank
