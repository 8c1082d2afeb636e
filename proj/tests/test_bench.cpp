#include "albank/bench.hpp"
#include "albank/http.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace albank;

namespace {

const Wei kGwei = 1'000'000'000;

// Gas of one bench KYC sample, from the schedule constants: base, 16 per
// byte of the sealed payload, 20000 per newly written storage word.
std::uint64_t expected_kyc_gas(std::uint32_t sample) {
    auto d = bench_kyc_record(sample);
    const std::string* fields[] = {&d.firstName, &d.middleName, &d.lastName, &d.dob, &d.email, &d.phone,
                                   &d.maritalStatus, &d.address_, &d.city, &d.state, &d.country, &d.zip,
                                   &d.nationality, &d.occupation, &d.employmentStatus, &d.idType, &d.idNumber,
                                   &d.idExpiry};
    std::uint64_t plain = 8 + 1 + 32, words = 2;  // income and document digest
    for (auto* f : fields) {
        plain += 4 + f->size();
        EXPECT_LT(f->size(), 32u);
        words += f->empty() ? 0 : 1;
    }
    const std::uint64_t sealed = 1 + 32 + 12 + 4 + plain + 16;  // version, key tag, nonce, length, tag
    return 21000 + 16 * sealed + 20000 * words;
}

struct BenchFixture : ::testing::Test {
    FixedClock clock;
    Node node{test::memory_config(), std::make_shared<FixedClock>()};
    LoopbackTransport loop{node};
    HttpNodeApi api{loop};
};

std::vector<MetricsRow> fresh_run() {
    Node node(test::memory_config(), std::make_shared<FixedClock>());
    LoopbackTransport loop(node);
    HttpNodeApi api(loop);
    FixedClock clock;
    return run_suite(api, {}, clock);
}

} // namespace

TEST_F(BenchFixture, DefaultRunHasSixtyRowsInTableOrder) {
    auto rows = run_suite(api, {}, clock);
    ASSERT_EQ(rows.size(), 60u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].function, bench_functions()[i / 10]);
        EXPECT_EQ(rows[i].sample, i % 10 + 1);
        EXPECT_EQ(rows[i].fee, Wei(rows[i].gas_units) * kGwei) << i;
        EXPECT_EQ(rows[i].speed_ms, 0.0);
    }
    EXPECT_EQ(bench_functions(),
              (std::array<std::string, 6>{"Add Customer", "Add KYC Customer Data", "Get KYC Data", "Deposit ETH",
                                          "Withdraw ETH", "Get Bank Balance"}));
}

TEST_F(BenchFixture, GasColumnsFollowSchedule) {
    auto rows = run_suite(api, {}, clock);
    for (const auto& r : rows) {
        const auto& fn = r.function;
        if (fn == "Add Customer") {
            EXPECT_EQ(r.gas_units, 41000u);
        } else if (fn == "Add KYC Customer Data") {
            EXPECT_EQ(r.gas_units, expected_kyc_gas(r.sample));
        } else if (fn == "Deposit ETH") {
            EXPECT_EQ(r.gas_units, r.sample == 1 ? 41000u : 26000u);
        } else if (fn == "Withdraw ETH") {
            EXPECT_EQ(r.gas_units, 21000u + 16 * 32 + 5000);
        } else {
            EXPECT_EQ(r.gas_units, 0u) << fn;
            EXPECT_EQ(r.fee, 0) << fn;
        }
    }
    // The shared wallet ends with ten deposits less ten withdrawals.
    auto bal = node.contract_state().pool;
    EXPECT_EQ(bal, parse_eth("0.005"));
}

TEST(Bench, KycIsTheMostExpensiveWrite) {
    auto means = summarize(fresh_run());
    ASSERT_EQ(means.size(), 6u);
    const auto& kyc = means[1];
    EXPECT_EQ(kyc.function, "Add KYC Customer Data");
    for (std::size_t i : {0, 3, 4}) EXPECT_GT(kyc.mean_gas_units, means[i].mean_gas_units) << means[i].function;
    for (std::size_t i : {2, 5}) {
        EXPECT_EQ(means[i].mean_gas_units, 0.0);
        EXPECT_EQ(means[i].mean_fee, 0);
    }
}

TEST(Bench, GasIsIdenticalAcrossFreshRuns) {
    auto a = fresh_run(), b = fresh_run();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].gas_units, b[i].gas_units) << i;
        EXPECT_EQ(a[i].fee, b[i].fee) << i;
    }
}

TEST(Bench, RunsDirectlyAgainstNode) {
    Node node(test::memory_config());
    auto rows = run_suite(node, {.samples = 2});
    EXPECT_EQ(rows.size(), 12u);
    for (const auto& r : rows) EXPECT_GE(r.speed_ms, 0.0);
}

TEST(Bench, Summaries) {
    std::vector<MetricsRow> rows;
    for (std::uint32_t i = 1; i <= 4; ++i) rows.push_back({"X", i, 2.5, 100, 7});
    rows.push_back({"Y", 1, 1.0, 10, 1});
    rows.push_back({"Y", 2, 2.0, 11, 2});
    auto s = summarize(rows);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0].function, "X");
    EXPECT_EQ(s[0].samples, 4u);
    EXPECT_DOUBLE_EQ(s[0].mean_speed_ms, 2.5);
    EXPECT_DOUBLE_EQ(s[0].mean_gas_units, 100.0);
    EXPECT_EQ(s[0].mean_fee, 7);
    EXPECT_DOUBLE_EQ(s[1].mean_gas_units, 10.5);
    EXPECT_EQ(s[1].mean_fee, 1);  // truncated
    EXPECT_THROW(summarize({}), std::invalid_argument);
}

TEST(Bench, ExportImportRoundTripsBothFormats) {
    auto rows = fresh_run();
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].speed_ms = static_cast<double>(i * 37 % 1000) + 0.125;
    for (auto format : {ExportFormat::Csv, ExportFormat::Long}) {
        std::stringstream ss;
        export_rows(rows, ss, format);
        EXPECT_EQ(import_rows(ss), rows);
    }
    test::TempDir dir;
    export_rows(rows, dir / "out.csv", ExportFormat::Csv);
    EXPECT_EQ(import_rows(dir / "out.csv"), rows);
}

TEST(Bench, CsvLayoutMatchesGolden) {
    std::stringstream ss;
    export_rows(fresh_run(), ss, ExportFormat::Csv);
    EXPECT_EQ(ss.str(), test::golden("bench_table.csv", ss.str()));

    std::stringstream lng;
    export_rows(fresh_run(), lng, ExportFormat::Long);
    std::string header;
    std::getline(lng, header);
    EXPECT_EQ(header, "function,sample,speed_ms,gas_units,fee_wei");
    std::string first;
    std::getline(lng, first);
    EXPECT_EQ(first, "Add Customer,1,0.000,41000,41000000000000");
}

TEST(Bench, ImportRejectsMalformedInput) {
    auto code = [](const std::string& text) {
        std::stringstream ss(text);
        try {
            import_rows(ss);
        } catch (const BenchError& e) {
            return e.code();
        }
        ADD_FAILURE() << "accepted: " << text;
        return BenchError::Code::IoError;
    };
    EXPECT_EQ(code(""), BenchError::Code::BadFormat);
    EXPECT_EQ(code("what,is,this\n"), BenchError::Code::BadFormat);
    EXPECT_EQ(code("function,sample,speed_ms,gas_units,fee_wei\nA,1,x,2,3\n"), BenchError::Code::BadFormat);
    EXPECT_EQ(code("function,sample,speed_ms,gas_units,fee_wei\nA,1,1.0,-2,3\n"), BenchError::Code::BadFormat);
    EXPECT_EQ(code("function,parameter,1,2\nA,Transaction Speed (ms),1.0\nA,Cumulative Gas Used,1,2\n"
                   "A,Network fee (ETH),1,2\n"),
              BenchError::Code::BadFormat);
    EXPECT_EQ(code("function,parameter,1\nA,Transaction Speed (ms),1.0\n"), BenchError::Code::BadFormat);

    try {
        import_rows(std::filesystem::path("/nonexistent/bench.csv"));
        FAIL();
    } catch (const BenchError& e) {
        EXPECT_EQ(e.code(), BenchError::Code::IoError);
    }
    EXPECT_THROW(export_rows({}, std::filesystem::path("/nonexistent/dir/out.csv"), ExportFormat::Csv), BenchError);
    EXPECT_EQ(parse_export_format("long"), ExportFormat::Long);
    EXPECT_THROW(parse_export_format("tsv"), std::invalid_argument);
}

TEST(Bench, ReportsUnreachableNodeAndSetupFailure) {
    std::uint16_t port;
    {
        Node node(test::memory_config());
        HttpServer s(node, "127.0.0.1", 0);
        s.start();
        port = s.port();
    }
    HttpTransport t("http://127.0.0.1:" + std::to_string(port));
    HttpNodeApi dead(t);
    try {
        run_suite(dead);
        FAIL();
    } catch (const BenchError& e) {
        EXPECT_EQ(e.code(), BenchError::Code::NodeUnreachable);
    }

    Node node(test::memory_config());
    try {
        run_suite(node, {.samples = 1, .deposit_amount = 10});
        FAIL();
    } catch (const BenchError& e) {
        EXPECT_EQ(e.code(), BenchError::Code::SetupFailed);
        EXPECT_NE(std::string(e.what()).find("Please deposit at least 10 wei"), std::string::npos);
    }
}
