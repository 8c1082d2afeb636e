#pragma once

// Measurement suite over the six bank functions: per sample, client-side
// wall time, gas used and network fee, exported as a table or long series.

#include "albank/api.hpp"
#include "albank/clock.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace albank {

/// Function names in table row order.
const std::array<std::string, 6>& bench_functions();

struct MetricsRow {
    std::string function;
    std::uint32_t sample = 0;  // 1-based
    double speed_ms = 0;       // rounded to whole microseconds
    std::uint64_t gas_units = 0;
    Wei fee = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct BenchOptions {
    std::uint32_t samples = 10;
    Wei deposit_amount = 1'000'000'000'000'000;   // 0.001 ETH
    Wei withdraw_amount = 500'000'000'000'000;    // 0.0005 ETH
};

class BenchError : public std::runtime_error {
public:
    enum class Code { NodeUnreachable, SetupFailed, IoError, BadFormat };

    BenchError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

/// The record every KYC sample submits; identical field lengths across
/// samples keep the gas column constant.
UserRegistrationData bench_kyc_record(std::uint32_t sample);

/// Runs samples strictly in sequence, function by function in table order.
/// Add Customer and KYC samples each use a fresh wallet; Deposit, Withdraw
/// and Get Bank Balance share one wallet. Throws BenchError.
std::vector<MetricsRow> run_suite(NodeApi& api, const BenchOptions& options = {},
                                  const Clock& clock = SystemClock());

struct FunctionSummary {
    std::string function;
    std::size_t samples = 0;
    double mean_speed_ms = 0;
    double mean_gas_units = 0;
    /// Integer mean, truncated toward zero.
    Wei mean_fee = 0;
};

/// Means per function, in first-seen order. Throws std::invalid_argument on
/// empty input.
std::vector<FunctionSummary> summarize(const std::vector<MetricsRow>& rows);

enum class ExportFormat { Csv, Long };

/// Csv: one line per (function, parameter) with a column per sample, then a
/// blank line and a summary block of means. Long: one line per row,
/// comma-delimited, for plotting tools.
void export_rows(const std::vector<MetricsRow>& rows, std::ostream& out, ExportFormat format);
void export_rows(const std::vector<MetricsRow>& rows, const std::filesystem::path& path, ExportFormat format);

/// Reads either format back. Throws BenchError{BadFormat|IoError}.
std::vector<MetricsRow> import_rows(std::istream& in);
std::vector<MetricsRow> import_rows(const std::filesystem::path& path);

ExportFormat parse_export_format(std::string_view name);

} // namespace albank
