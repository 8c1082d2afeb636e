#include "albank/amount.hpp"

#include <algorithm>
#include <cctype>

namespace albank {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

Wei accumulate_digits(std::string_view digits) {
    Wei out = 0;
    try {
        for (char c : digits) out = out * 10 + static_cast<unsigned>(c - '0');
    } catch (const std::overflow_error&) {
        throw AmountError("amount does not fit in 256 bits");
    }
    return out;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

} // namespace

Wei one_eth() {
    static const Wei v = [] {
        Wei x = 1;
        for (unsigned i = 0; i < kEthDecimals; ++i) x *= 10;
        return x;
    }();
    return v;
}

Wei parse_wei(std::string_view text) {
    if (!all_digits(text)) throw AmountError("invalid wei amount: '" + std::string(text) + "'");
    return accumulate_digits(text);
}

std::string format_wei(const Wei& v) { return v.str(); }

Wei parse_eth(std::string_view text) {
    const auto dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw AmountError("invalid ETH amount: '" + std::string(text) + "'");
    if (!whole.empty() && !all_digits(whole))
        throw AmountError("invalid ETH amount: '" + std::string(text) + "'");
    if (dot != std::string_view::npos && !frac.empty() && !all_digits(frac))
        throw AmountError("invalid ETH amount: '" + std::string(text) + "'");
    if (frac.size() > kEthDecimals)
        throw AmountError("ETH amount has more than 18 decimal places");

    std::string digits(whole.empty() ? "0" : whole);
    digits.append(frac);
    digits.append(kEthDecimals - frac.size(), '0');
    return accumulate_digits(digits);
}

std::string format_eth(const Wei& v) {
    std::string digits = v.str();
    if (digits.size() <= kEthDecimals) digits.insert(0, kEthDecimals + 1 - digits.size(), '0');
    std::string whole = digits.substr(0, digits.size() - kEthDecimals);
    std::string frac = digits.substr(digits.size() - kEthDecimals);
    while (!frac.empty() && frac.back() == '0') frac.pop_back();
    return frac.empty() ? whole : whole + "." + frac;
}

Wei parse_amount(std::string_view raw) {
    std::string text = trim(raw);
    std::string lower = text;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower.ends_with("wei")) return parse_wei(trim(std::string_view(text).substr(0, text.size() - 3)));
    if (lower.ends_with("eth")) return parse_eth(trim(std::string_view(text).substr(0, text.size() - 3)));
    return parse_eth(text);
}

} // namespace albank
