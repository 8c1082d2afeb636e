#include "albank/bankvm.hpp"
#include "albank/json_codec.hpp"

#include "support.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace albank;
using albank::test::sample_record;
using albank::test::wallet;
using boost::multiprecision::cpp_int;

namespace {

const Wei kGasPrice = 1'000'000'000;

Address addr(int n) { return wallet(n).address; }

std::uint64_t words_of(const std::string& s) {
    if (s.empty()) return 0;
    if (s.size() < 32) return 1;
    return 1 + (s.size() + 31) / 32;
}

template <class Data>
auto strings_of(Data& d) {
    return std::vector{&d.firstName, &d.middleName, &d.lastName, &d.dob, &d.email, &d.phone,
            &d.maritalStatus, &d.address_, &d.city, &d.state, &d.country, &d.zip,
            &d.nationality, &d.occupation, &d.employmentStatus, &d.idType, &d.idNumber, &d.idExpiry};
}

// Independent model of the contract: unbounded integers, plain maps, and the
// gas schedule recomputed from its published constants.
struct Oracle {
    struct Verdict {
        bool success;
        std::string message;
        std::uint64_t gas;
    };

    std::map<Address, cpp_int> balances;
    std::set<Address> customers;
    std::map<Address, UserRegistrationData> users;
    cpp_int pool = 0;

    static constexpr std::uint64_t base = 21000, fresh = 20000, rewrite = 5000, per_byte = 16;

    Verdict add_customer(const Address& a) {
        if (customers.contains(a)) return {false, "Address is already a customer", base};
        customers.insert(a);
        return {true, "", base + fresh};
    }

    Verdict register_user(const Address& a, const UserRegistrationData& d, bool digest) {
        std::uint64_t payload = 8 + 1 + (digest ? 32 : 0);
        for (auto* s : strings_of(d)) payload += 4 + s->size();
        const std::uint64_t failed = base + per_byte * payload;
        if (users.contains(a)) return {false, "User is already registered", failed};
        const std::pair<const std::string*, const char*> required[] = {
            {&d.firstName, "First name is required"}, {&d.lastName, "Last name is required"},
            {&d.dob, "Date of birth is required"},    {&d.email, "Email is required"},
            {&d.phone, "Phone number is required"},   {&d.address_, "Address is required"},
            {&d.city, "City is required"},            {&d.state, "State is required"},
            {&d.country, "Country is required"},      {&d.zip, "ZIP code is required"},
            {&d.idType, "ID type is required"},       {&d.idNumber, "ID number is required"},
        };
        for (auto& [field, message] : required)
            if (field->empty()) return {false, message, failed};
        std::uint64_t words = (d.annualIncome ? 1 : 0) + (digest ? 1 : 0);
        for (auto* s : strings_of(d)) words += words_of(*s);
        users[a] = d;
        return {true, "", failed + fresh * words};
    }

    Verdict deposit(const Address& a, const cpp_int& v) {
        if (v <= 10) return {false, "Please deposit at least 10 wei", base};
        const std::uint64_t gas = base + (balances[a] == 0 ? fresh : rewrite);
        balances[a] += v;
        pool += v;
        return {true, "", gas};
    }

    Verdict withdraw(const Address& a, const cpp_int& amount) {
        const std::uint64_t failed = base + per_byte * 32;
        if (amount > balances[a]) return {false, "You do not have sufficient balance", failed};
        const std::uint64_t gas = failed + (balances[a] != 0 ? rewrite : 0);
        balances[a] -= amount;
        pool -= amount;
        return {true, "", gas};
    }
};

cpp_int big(const Wei& w) { return cpp_int(w.str()); }

cpp_int balance_sum(const ContractState& s) {
    cpp_int total = 0;
    for (auto& [_, v] : s.userbalance) total += big(v);
    return total;
}

std::string random_text(std::mt19937_64& rng) {
    // Empty, short, exactly one word, and multi-word strings.
    static const std::size_t lengths[] = {0, 1, 5, 31, 32, 33, 64, 70};
    const auto len = lengths[rng() % std::size(lengths)];
    std::string s(len, 'a');
    for (auto& c : s) c = static_cast<char>('a' + rng() % 26);
    return s;
}

UserRegistrationData random_record(std::mt19937_64& rng) {
    UserRegistrationData d = sample_record();
    for (auto* m : strings_of(d)) {
        switch (rng() % 6) {
        case 0: m->clear(); break;
        case 1: *m = random_text(rng); break;
        default: break;
        }
    }
    d.annualIncome = rng() % 3 == 0 ? 0 : rng() % 1'000'000;
    return d;
}

Wei random_amount(std::mt19937_64& rng, const cpp_int& balance) {
    switch (rng() % 5) {
    case 0: return rng() % 15;
    case 1: return Wei(cpp_int(balance + 1).str());
    case 2: return Wei(balance.str());
    case 3: return balance == 0 ? Wei(rng() % 100) : Wei(cpp_int(balance / 2).str());
    default: return Wei(rng()) * Wei(rng() % 1000);
    }
}

void expect_quiescent(const BankVm& vm) {
    EXPECT_FALSE(vm.state().locked);
    EXPECT_EQ(big(vm.state().pool), balance_sum(vm.state()));
}

} // namespace

TEST(GasSchedule, StringWordsFollowStorageLayout) {
    EXPECT_EQ(GasSchedule::string_words(""), 0u);
    EXPECT_EQ(GasSchedule::string_words(std::string(31, 'x')), 1u);
    EXPECT_EQ(GasSchedule::string_words(std::string(32, 'x')), 2u);
    EXPECT_EQ(GasSchedule::string_words(std::string(64, 'x')), 3u);
    EXPECT_EQ(GasSchedule::string_words(std::string(65, 'x')), 4u);
}

TEST(BankVm, AddCustomerOnceAndFeeLaw) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    auto r = vm.add_customer(addr(1));
    ASSERT_TRUE(r.success);
    EXPECT_TRUE(vm.state().customers.contains(addr(1)));
    EXPECT_EQ(r.gas_used, 41000u);
    EXPECT_EQ(r.network_fee, Wei(r.gas_used) * kGasPrice);

    auto again = vm.add_customer(addr(1));
    EXPECT_FALSE(again.success);
    EXPECT_EQ(again.error, VmErrorCode::AlreadyCustomer);
    EXPECT_EQ(again.gas_used, 21000u);
    EXPECT_EQ(again.network_fee, Wei(21000) * kGasPrice);
}

TEST(BankVm, GuardMessagesAreExact) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);

    auto r = vm.deposit(addr(1), 10);
    EXPECT_EQ(r.error_message, "Please deposit at least 10 wei");
    EXPECT_EQ(r.error, VmErrorCode::DepositTooSmall);

    r = vm.withdraw(addr(1), 1);
    EXPECT_EQ(r.error_message, "You do not have sufficient balance");

    ASSERT_TRUE(vm.register_user(addr(1), sample_record()).success);
    r = vm.register_user(addr(1), sample_record());
    EXPECT_EQ(r.error_message, "User is already registered");
    EXPECT_EQ(r.error, VmErrorCode::AlreadyRegistered);

    try {
        vm.get_user(addr(2));
        FAIL();
    } catch (const VmError& e) {
        EXPECT_EQ(std::string(e.what()), "User does not exist");
        EXPECT_EQ(e.code(), VmErrorCode::NoSuchUser);
    }
    try {
        vm.get_user(Address{});
        FAIL();
    } catch (const VmError& e) {
        EXPECT_EQ(std::string(e.what()), "Invalid address");
        EXPECT_EQ(e.code(), VmErrorCode::InvalidAddress);
    }

    vm.set_transfer_hook([](BankVm& inner, const Address& to, const Wei&) {
        auto nested = inner.withdraw(to, 1);
        EXPECT_EQ(nested.error_message, "Reentrant call");
    });
    ASSERT_TRUE(vm.deposit(addr(3), 100).success);
    EXPECT_TRUE(vm.withdraw(addr(3), 50).success);
}

TEST(BankVm, EachRequiredFieldHasItsMessage) {
    const std::vector<std::pair<std::string UserRegistrationData::*, std::string>> expected = {
        {&UserRegistrationData::firstName, "First name is required"},
        {&UserRegistrationData::lastName, "Last name is required"},
        {&UserRegistrationData::dob, "Date of birth is required"},
        {&UserRegistrationData::email, "Email is required"},
        {&UserRegistrationData::phone, "Phone number is required"},
        {&UserRegistrationData::address_, "Address is required"},
        {&UserRegistrationData::city, "City is required"},
        {&UserRegistrationData::state, "State is required"},
        {&UserRegistrationData::country, "Country is required"},
        {&UserRegistrationData::zip, "ZIP code is required"},
        {&UserRegistrationData::idType, "ID type is required"},
        {&UserRegistrationData::idNumber, "ID number is required"},
    };
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    for (const auto& [member, message] : expected) {
        auto d = sample_record();
        d.*member = "";
        auto r = vm.register_user(addr(1), d);
        EXPECT_FALSE(r.success);
        EXPECT_EQ(r.error, VmErrorCode::FieldRequired);
        EXPECT_EQ(r.error_message, message);
    }
    EXPECT_TRUE(vm.state().users.empty());

    // With every required field blank, the first in declaration order wins.
    UserRegistrationData blank;
    EXPECT_EQ(vm.register_user(addr(1), blank).error_message, "First name is required");
    auto late = sample_record();
    late.zip.clear();
    late.idNumber.clear();
    EXPECT_EQ(vm.register_user(addr(1), late).error_message, "ZIP code is required");

    // Optional fields may be blank.
    auto optional_blank = sample_record();
    optional_blank.middleName.clear();
    optional_blank.maritalStatus.clear();
    optional_blank.nationality.clear();
    optional_blank.occupation.clear();
    optional_blank.employmentStatus.clear();
    optional_blank.idExpiry.clear();
    optional_blank.annualIncome = 0;
    EXPECT_TRUE(vm.register_user(addr(1), optional_blank).success);
}

TEST(BankVm, RegisteredRecordRoundTripsWithZeroCostView) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    Digest doc;
    doc.bytes.fill(0x5a);
    auto r = vm.register_user(addr(1), sample_record(), doc);
    ASSERT_TRUE(r.success);
    ASSERT_EQ(r.events.size(), 1u);
    EXPECT_EQ(r.events[0], (Event{EventName::UserRegistered, {addr(1)}}));

    auto view = vm.get_user(addr(1));
    EXPECT_EQ(view.value, sample_record());
    EXPECT_EQ(view.gas_used, 0u);
    EXPECT_EQ(view.network_fee, 0);
    EXPECT_EQ(vm.id_document(addr(1)), doc);
    EXPECT_EQ(vm.id_document(addr(2)), std::nullopt);

    auto b = vm.get_balance(addr(9));
    EXPECT_EQ(b.value, 0);
    EXPECT_EQ(b.gas_used, 0u);
    EXPECT_EQ(b.network_fee, 0);
}

TEST(BankVm, DepositBoundaryAndEventOrder) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    EXPECT_FALSE(vm.deposit(addr(1), 10).success);
    auto r = vm.deposit(addr(1), 11);
    ASSERT_TRUE(r.success);
    EXPECT_EQ(vm.get_balance(addr(1)).value, 11);
    ASSERT_EQ(r.events.size(), 3u);
    EXPECT_EQ(r.events[0], (Event{EventName::Deposit, {addr(1), Wei(11)}}));
    EXPECT_EQ(r.events[1], (Event{EventName::GasConsumption, {Wei(r.gas_used)}}));
    EXPECT_EQ(r.events[2], (Event{EventName::ElapsedTime, {Wei(0)}}));

    const Wei one_eth = parse_eth("1");
    ASSERT_TRUE(vm.deposit(addr(2), one_eth).success);
    EXPECT_EQ(vm.get_balance(addr(2)).value, one_eth);
}

TEST(BankVm, WithdrawBoundaries) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    ASSERT_TRUE(vm.deposit(addr(1), 100).success);
    ASSERT_TRUE(vm.withdraw(addr(1), 40).success);
    EXPECT_EQ(vm.get_balance(addr(1)).value, 60);

    auto over = vm.withdraw(addr(1), 61);
    EXPECT_EQ(over.error, VmErrorCode::InsufficientBalance);
    EXPECT_FALSE(vm.state().locked);

    auto all = vm.withdraw(addr(1), 60);
    ASSERT_TRUE(all.success);
    EXPECT_EQ(vm.get_balance(addr(1)).value, 0);
    ASSERT_EQ(all.events.size(), 3u);
    EXPECT_EQ(all.events[0], (Event{EventName::Withdrawal, {addr(1), Wei(60)}}));
    EXPECT_EQ(vm.state().pool, 0);
}

TEST(BankVm, NestedWithdrawIsRejectedAndDebitsOnce) {
    FixedClock clock;
    BankVm attacked(addr(0), kGasPrice, clock), plain(addr(0), kGasPrice, clock);
    std::vector<Receipt> inner;
    attacked.set_transfer_hook([&](BankVm& vm, const Address& to, const Wei& amount) {
        inner.push_back(vm.withdraw(to, amount));
    });
    for (auto* vm : {&attacked, &plain}) {
        ASSERT_TRUE(vm->deposit(addr(1), 1000).success);
        ASSERT_TRUE(vm->withdraw(addr(1), 300).success);
    }
    ASSERT_EQ(inner.size(), 1u);
    EXPECT_FALSE(inner[0].success);
    EXPECT_EQ(inner[0].error, VmErrorCode::ReentrantCall);
    EXPECT_EQ(inner[0].error_message, "Reentrant call");
    EXPECT_EQ(attacked.state(), plain.state());
    EXPECT_EQ(attacked.get_balance(addr(1)).value, 700);
    expect_quiescent(attacked);
}

TEST(BankVm, HookMayDeposit) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    vm.set_transfer_hook([&](BankVm& inner, const Address& to, const Wei&) {
        ASSERT_TRUE(inner.deposit(to, 50).success);
    });
    ASSERT_TRUE(vm.deposit(addr(1), 100).success);
    ASSERT_TRUE(vm.withdraw(addr(1), 80).success);
    EXPECT_EQ(vm.get_balance(addr(1)).value, 70);
    expect_quiescent(vm);
}

TEST(BankVm, FailedTransferRollsBack) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    ASSERT_TRUE(vm.deposit(addr(1), 100).success);
    const auto before = vm.state();
    vm.set_transfer_hook([](BankVm& inner, const Address& to, const Wei&) {
        inner.deposit(to, 500);
        throw std::runtime_error("recipient refused");
    });
    auto r = vm.withdraw(addr(1), 30);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.error, VmErrorCode::TransferFailed);
    EXPECT_EQ(r.error_message, "Transfer failed: recipient refused");
    EXPECT_EQ(r.gas_used, 21000u + 16 * 32);
    EXPECT_TRUE(r.events.empty());
    EXPECT_EQ(vm.state(), before);
}

TEST(BankVm, ExecuteDispatchesAndRejectsMalformed) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    auto w = wallet(1);

    auto ok = vm.execute(w.sign_transaction(Operation::Deposit, 11, {}, 1));
    EXPECT_TRUE(ok.success);
    EXPECT_EQ(ok.events.front().name, EventName::Deposit);
    const auto before = vm.state();

    auto paid = vm.execute(w.sign_transaction(Operation::AddCustomer, 5, {}, 2));
    EXPECT_EQ(paid.error, VmErrorCode::NotPayable);
    EXPECT_EQ(paid.error_message, "Function does not accept value");

    auto short_withdraw = vm.execute(w.sign_transaction(Operation::Withdraw, 0, Bytes(31, 0), 3));
    EXPECT_EQ(short_withdraw.error, VmErrorCode::DecodeError);
    EXPECT_EQ(short_withdraw.gas_used, 21000u + 16 * 31);

    auto junk_deposit = vm.execute(w.sign_transaction(Operation::Deposit, 100, Bytes{1}, 4));
    EXPECT_EQ(junk_deposit.error, VmErrorCode::DecodeError);

    auto no_opener = vm.execute(w.sign_transaction(Operation::RegisterKyc, 0, Bytes{1, 2}, 5));
    EXPECT_EQ(no_opener.error, VmErrorCode::DecodeError);

    auto unknown = vm.execute(w.sign_transaction(std::uint8_t{99}, 0, {}, 6));
    EXPECT_EQ(unknown.error, VmErrorCode::UnknownOperation);
    EXPECT_EQ(unknown.error_message, "Unknown operation");

    EXPECT_EQ(vm.state(), before);

    auto withdraw = vm.execute(w.sign_transaction(Operation::Withdraw, 0, encode_withdraw_payload(5), 7));
    EXPECT_TRUE(withdraw.success);
    EXPECT_EQ(withdraw.tx_id, w.sign_transaction(Operation::Withdraw, 0, encode_withdraw_payload(5), 7).tx_id);
    EXPECT_EQ(vm.get_balance(w.address).value, 6);
}

TEST(BankVm, ExecuteUsesPayloadOpener) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    auto w = wallet(1);
    vm.set_payload_opener([](const Transaction& tx) { return KycSubmission::decode(tx.payload); });
    KycSubmission s{sample_record(), std::nullopt};
    auto r = vm.execute(w.sign_transaction(Operation::RegisterKyc, 0, s.encode(), 1));
    ASSERT_TRUE(r.success);
    EXPECT_EQ(vm.get_user(w.address).value, sample_record());

    vm.set_payload_opener([](const Transaction&) -> KycSubmission { throw std::runtime_error("sealed elsewhere"); });
    auto bad = vm.execute(wallet(2).sign_transaction(Operation::RegisterKyc, 0, s.encode(), 1));
    EXPECT_EQ(bad.error, VmErrorCode::DecodeError);
    EXPECT_EQ(bad.error_message, "Malformed payload: sealed elsewhere");
    EXPECT_FALSE(vm.state().users.contains(wallet(2).address));
}

TEST(BankVm, ReplayingTheSameSequenceGivesIdenticalReceipts) {
    auto run = [] {
        FixedClock clock;
        BankVm vm(addr(0), kGasPrice, clock);
        vm.set_payload_opener([](const Transaction& tx) { return KycSubmission::decode(tx.payload); });
        std::vector<Receipt> out;
        auto w = wallet(1);
        out.push_back(vm.execute(w.sign_transaction(Operation::AddCustomer, 0, {}, 1)));
        out.push_back(vm.execute(
            w.sign_transaction(Operation::RegisterKyc, 0, KycSubmission{sample_record(), {}}.encode(), 2)));
        out.push_back(vm.execute(w.sign_transaction(Operation::Deposit, 1000, {}, 3)));
        out.push_back(vm.execute(w.sign_transaction(Operation::Withdraw, 0, encode_withdraw_payload(5000), 4)));
        out.push_back(vm.execute(w.sign_transaction(Operation::Withdraw, 0, encode_withdraw_payload(400), 5)));
        return std::pair{out, vm.state()};
    };
    auto [a, sa] = run();
    auto [b, sb] = run();
    EXPECT_EQ(a, b);
    EXPECT_EQ(sa, sb);
}

TEST(BankVm, EventLogMatchesGolden) {
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    vm.set_payload_opener([](const Transaction& tx) { return KycSubmission::decode(tx.payload); });
    auto w = wallet(1);
    std::vector<Transaction> txs = {
        w.sign_transaction(Operation::AddCustomer, 0, {}, 1),
        w.sign_transaction(Operation::RegisterKyc, 0, KycSubmission{sample_record(), {}}.encode(), 2),
        w.sign_transaction(Operation::Deposit, parse_eth("1"), {}, 3),
        w.sign_transaction(Operation::Withdraw, 0, encode_withdraw_payload(parse_eth("0.4")), 4),
    };
    std::string log;
    for (const auto& tx : txs) {
        auto r = vm.execute(tx);
        ASSERT_TRUE(r.success) << r.error_message;
        for (const auto& e : r.events) log += event_record(tx.tx_id, e).dump() + "\n";
    }
    EXPECT_EQ(log, test::golden("bankvm_events.jsonl", log));
    EXPECT_EQ(vm.get_balance(w.address).value, parse_eth("0.6"));
}

TEST(BankVm, RandomSequencesMatchOracle) {
    std::mt19937_64 rng(20240611);
    FixedClock clock;
    BankVm vm(addr(0), kGasPrice, clock);
    Oracle oracle;
    std::vector<Address> people;
    for (int i = 1; i <= 6; ++i) people.push_back(addr(i));

    for (int step = 0; step < 1000; ++step) {
        const Address& who = people[rng() % people.size()];
        Oracle::Verdict expect;
        Receipt got;
        switch (rng() % 4) {
        case 0:
            expect = oracle.add_customer(who);
            got = vm.add_customer(who);
            break;
        case 1: {
            auto d = random_record(rng);
            bool digest = rng() % 2;
            Digest doc;
            doc.bytes.fill(static_cast<std::uint8_t>(step));
            expect = oracle.register_user(who, d, digest);
            got = vm.register_user(who, d, digest ? std::optional(doc) : std::nullopt);
            break;
        }
        case 2: {
            Wei v = random_amount(rng, 0);
            expect = oracle.deposit(who, big(v));
            got = vm.deposit(who, v);
            break;
        }
        default: {
            Wei v = random_amount(rng, oracle.balances[who]);
            expect = oracle.withdraw(who, big(v));
            got = vm.withdraw(who, v);
            break;
        }
        }
        ASSERT_EQ(got.success, expect.success) << "step " << step;
        ASSERT_EQ(got.error_message, expect.message) << "step " << step;
        ASSERT_EQ(got.gas_used, expect.gas) << "step " << step;
        ASSERT_EQ(got.network_fee, Wei(expect.gas) * kGasPrice);
        ASSERT_FALSE(vm.state().locked);
        ASSERT_EQ(big(vm.state().pool), balance_sum(vm.state())) << "step " << step;
        ASSERT_EQ(big(vm.state().pool), oracle.pool);
        for (auto& [a, v] : vm.state().userbalance) ASSERT_EQ(big(v), oracle.balances[a]);
        ASSERT_EQ(vm.state().customers, oracle.customers);
        // Write-once: stored records equal the oracle's first successful record.
        ASSERT_EQ(vm.state().users, oracle.users);
    }
    EXPECT_FALSE(oracle.users.empty());
    EXPECT_GT(oracle.pool, 0);
}
