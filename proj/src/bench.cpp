#include "albank/bench.hpp"

#include "albank/client.hpp"
#include "albank/http.hpp"

#include <boost/algorithm/string/split.hpp>
#include <boost/algorithm/string/classification.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace albank {

namespace {

constexpr const char* kSpeedParam = "Transaction Speed (ms)";
constexpr const char* kGasParam = "Cumulative Gas Used";
constexpr const char* kFeeParam = "Network fee (ETH)";
constexpr const char* kCsvHeader = "function,parameter";
constexpr const char* kLongHeader = "function,sample,speed_ms,gas_units,fee_wei";
constexpr const char* kSummaryHeader = "function,samples,mean_speed_ms,mean_gas_units,mean_fee_eth";

double round_us(double ms) { return std::round(ms * 1000.0) / 1000.0; }

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    boost::split(out, line, boost::is_any_of(","));
    return out;
}

template <typename F>
auto timed(const Clock& clock, F&& f) {
    const double start = clock.steady_ms();
    auto result = f();
    return std::pair{result, round_us(clock.steady_ms() - start)};
}

[[noreturn]] void bad_format(const std::string& what) { throw BenchError(BenchError::Code::BadFormat, what); }

double parse_double(const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) bad_format("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        bad_format("bad number '" + s + "'");
    }
}

std::uint64_t parse_u64(const std::string& s) {
    try {
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used != s.size() || s.starts_with('-')) bad_format("bad integer '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        bad_format("bad integer '" + s + "'");
    }
}

} // namespace

const std::array<std::string, 6>& bench_functions() {
    static const std::array<std::string, 6> names{"Add Customer", "Add KYC Customer Data", "Get KYC Data",
                                                  "Deposit ETH",  "Withdraw ETH",          "Get Bank Balance"};
    return names;
}

UserRegistrationData bench_kyc_record(std::uint32_t sample) {
    char idn[16];
    std::snprintf(idn, sizeof idn, "P%08u", sample);
    UserRegistrationData d;
    d.firstName = "Amara";
    d.middleName = "N";
    d.lastName = "Okafor";
    d.dob = "1990-04-12";
    d.email = "amara.okafor@example.org";
    d.phone = "+2348012345678";
    d.maritalStatus = "Single";
    d.address_ = "12 Marina Road";
    d.city = "Lagos";
    d.state = "Lagos";
    d.country = "Nigeria";
    d.zip = "101001";
    d.nationality = "Nigerian";
    d.occupation = "Engineer";
    d.employmentStatus = "Employed";
    d.annualIncome = 54000;
    d.idType = "Passport";
    d.idNumber = idn;
    d.idExpiry = "2030-01-31";
    return d;
}

std::vector<MetricsRow> run_suite(NodeApi& api, const BenchOptions& options, const Clock& clock) {
    if (options.samples == 0) throw std::invalid_argument("samples must be positive");
    const auto& names = bench_functions();
    std::vector<MetricsRow> rows;
    rows.reserve(6 * options.samples);
    auto add = [&](const std::string& fn, std::uint32_t i, double ms, std::uint64_t gas, const Wei& fee) {
        rows.push_back(MetricsRow{fn, i, ms, gas, fee});
    };

    try {
        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            BankClient c(api, create_wallet());
            c.login();
            auto [r, ms] = timed(clock, [&] { return c.add_customer(); });
            add(names[0], i, ms, r.gas_used, r.network_fee);
        }

        std::vector<KycToken> tokens;
        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            BankClient c(api, create_wallet());
            c.login();
            KycSubmission sub{bench_kyc_record(i), crypto::sha256(to_bytes("id-file-" + std::to_string(i)))};
            auto [r, ms] = timed(clock, [&] { return c.submit_kyc(sub, [](const UserRegistrationData&) { return true; }); });
            tokens.push_back(r.token);
            add(names[1], i, ms, r.receipt.gas_used, r.receipt.network_fee);
        }

        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            auto [r, ms] = timed(clock, [&] { return api.fetch_kyc(to_hex(tokens[i - 1].token)); });
            add(names[2], i, ms, r.gas_used, r.network_fee);
        }

        BankClient shared(api, create_wallet());
        shared.login();
        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            auto [r, ms] = timed(clock, [&] { return shared.deposit(options.deposit_amount); });
            add(names[3], i, ms, r.gas_used, r.network_fee);
        }
        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            auto [r, ms] = timed(clock, [&] { return shared.withdraw(options.withdraw_amount); });
            add(names[4], i, ms, r.gas_used, r.network_fee);
        }
        for (std::uint32_t i = 1; i <= options.samples; ++i) {
            auto [r, ms] = timed(clock, [&] { return shared.balance(); });
            add(names[5], i, ms, r.gas_used, r.network_fee);
        }
    } catch (const TransportError& e) {
        throw BenchError(BenchError::Code::NodeUnreachable, e.what());
    } catch (const ApiError& e) {
        throw BenchError(BenchError::Code::SetupFailed, e.code() + ": " + e.what());
    } catch (const KycError& e) {
        throw BenchError(BenchError::Code::SetupFailed, e.what());
    }
    return rows;
}

std::vector<FunctionSummary> summarize(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("no rows to summarize");
    std::vector<FunctionSummary> out;
    std::map<std::string, std::size_t> index;
    std::vector<Wei> fee_totals;
    for (const auto& r : rows) {
        auto [it, fresh] = index.emplace(r.function, out.size());
        if (fresh) {
            out.push_back(FunctionSummary{r.function});
            fee_totals.emplace_back(0);
        }
        auto& s = out[it->second];
        ++s.samples;
        s.mean_speed_ms += r.speed_ms;
        s.mean_gas_units += static_cast<double>(r.gas_units);
        fee_totals[it->second] += r.fee;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto n = static_cast<double>(out[i].samples);
        out[i].mean_speed_ms /= n;
        out[i].mean_gas_units /= n;
        out[i].mean_fee = fee_totals[i] / out[i].samples;
    }
    return out;
}

void export_rows(const std::vector<MetricsRow>& rows, std::ostream& out, ExportFormat format) {
    if (format == ExportFormat::Long) {
        out << kLongHeader << '\n';
        for (const auto& r : rows)
            out << r.function << ',' << r.sample << ',' << fixed3(r.speed_ms) << ',' << r.gas_units << ','
                << format_wei(r.fee) << '\n';
        return;
    }

    // Group by function in first-seen order, samples in index order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> groups;
    std::uint32_t width = 0;
    for (const auto& r : rows) {
        auto& g = groups[r.function];
        if (g.empty()) order.push_back(r.function);
        g.push_back(&r);
        width = std::max(width, r.sample);
    }
    for (auto& [_, g] : groups)
        std::sort(g.begin(), g.end(), [](const MetricsRow* a, const MetricsRow* b) { return a->sample < b->sample; });

    out << kCsvHeader;
    for (std::uint32_t i = 1; i <= width; ++i) out << ',' << i;
    out << '\n';
    for (const auto& fn : order) {
        const auto& g = groups[fn];
        out << fn << ',' << kSpeedParam;
        for (auto* r : g) out << ',' << fixed3(r->speed_ms);
        out << '\n' << fn << ',' << kGasParam;
        for (auto* r : g) out << ',' << r->gas_units;
        out << '\n' << fn << ',' << kFeeParam;
        for (auto* r : g) out << ',' << format_eth(r->fee);
        out << '\n';
    }
    if (rows.empty()) return;
    out << '\n' << kSummaryHeader << '\n';
    for (const auto& s : summarize(rows))
        out << s.function << ',' << s.samples << ',' << fixed3(s.mean_speed_ms) << ',' << fixed3(s.mean_gas_units)
            << ',' << format_eth(s.mean_fee) << '\n';
}

void export_rows(const std::vector<MetricsRow>& rows, const std::filesystem::path& path, ExportFormat format) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw BenchError(BenchError::Code::IoError, "cannot write " + path.string());
    export_rows(rows, out, format);
    out.flush();
    if (!out) throw BenchError(BenchError::Code::IoError, "write failed for " + path.string());
}

std::vector<MetricsRow> import_rows(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) bad_format("empty input");
    std::vector<MetricsRow> rows;

    if (line == kLongHeader) {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto f = split_csv(line);
            if (f.size() != 5) bad_format("expected 5 columns: " + line);
            try {
                rows.push_back(MetricsRow{f[0], static_cast<std::uint32_t>(parse_u64(f[1])), parse_double(f[2]),
                                          parse_u64(f[3]), parse_wei(f[4])});
            } catch (const AmountError& e) {
                bad_format(e.what());
            }
        }
        return rows;
    }

    if (!line.starts_with(kCsvHeader)) bad_format("unrecognised header: " + line);
    const auto header = split_csv(line);
    while (std::getline(in, line)) {
        if (line.empty()) break;  // summary block follows
        std::string lines[3] = {line, {}, {}};
        if (!std::getline(in, lines[1]) || !std::getline(in, lines[2])) bad_format("truncated function block");
        std::vector<std::string> cols[3];
        const char* params[3] = {kSpeedParam, kGasParam, kFeeParam};
        for (int k = 0; k < 3; ++k) {
            cols[k] = split_csv(lines[k]);
            if (cols[k].size() < 2 || cols[k][1] != params[k] || cols[k][0] != cols[0][0])
                bad_format("unexpected line: " + lines[k]);
            if (cols[k].size() != cols[0].size() || cols[k].size() > header.size())
                bad_format("ragged sample columns for " + cols[0][0]);
        }
        for (std::size_t c = 2; c < cols[0].size(); ++c) {
            try {
                rows.push_back(MetricsRow{cols[0][0], static_cast<std::uint32_t>(parse_u64(header[c])),
                                          parse_double(cols[0][c]), parse_u64(cols[1][c]), parse_eth(cols[2][c])});
            } catch (const AmountError& e) {
                bad_format(e.what());
            }
        }
    }
    return rows;
}

std::vector<MetricsRow> import_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw BenchError(BenchError::Code::IoError, "cannot read " + path.string());
    return import_rows(in);
}

ExportFormat parse_export_format(std::string_view name) {
    if (name == "csv") return ExportFormat::Csv;
    if (name == "long") return ExportFormat::Long;
    throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected csv or long)");
}

} // namespace albank
