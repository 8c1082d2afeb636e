#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace albank {

/// Amounts in wei. Checked 256-bit arithmetic, same width as Solidity's
/// uint256; overflow and underflow throw std::overflow_error / std::range_error.
using Wei = boost::multiprecision::checked_uint256_t;

constexpr unsigned kEthDecimals = 18;

class AmountError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Strict decimal integer: digits only, no sign, no prefix, fits in 256 bits.
Wei parse_wei(std::string_view text);
std::string format_wei(const Wei& v);

/// Decimal ETH ("1", "0.4", ".5", "12.000000000000000001") to wei using
/// scaled integer arithmetic. At most 18 fractional digits.
Wei parse_eth(std::string_view text);
/// Shortest exact decimal ETH representation ("0.6", "1", "0.000000000000000011").
std::string format_eth(const Wei& v);

/// "<n>wei", "<n>eth" or a bare number, which is read as ETH.
Wei parse_amount(std::string_view text);

Wei one_eth();

} // namespace albank
