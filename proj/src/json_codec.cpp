#include "albank/json_codec.hpp"

#include <limits>

namespace albank {

namespace {

const std::string& str_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw std::invalid_argument(std::string("missing string field '") + key + "'");
    return j.at(key).get_ref<const std::string&>();
}

std::optional<EventName> parse_event_name(std::string_view s) {
    for (auto e : {EventName::UserRegistered, EventName::Deposit, EventName::Withdrawal, EventName::GasConsumption,
                   EventName::ElapsedTime})
        if (event_name(e) == s) return e;
    return std::nullopt;
}

std::optional<VmErrorCode> parse_vm_error(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(VmErrorCode::TransferFailed); ++i) {
        auto c = static_cast<VmErrorCode>(i);
        if (vm_error_name(c) == s) return c;
    }
    return std::nullopt;
}

std::optional<Violation> parse_violation(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(Violation::DecodeError); ++i) {
        auto v = static_cast<Violation>(i);
        if (violation_name(v) == s) return v;
    }
    return std::nullopt;
}

} // namespace

std::string address_hex(const Address& a) { return "0x" + to_hex(a); }

Address parse_address(std::string_view text) {
    try {
        return fixed_from_hex<Address>(text);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("invalid address '" + std::string(text) + "'");
    }
}

Digest parse_digest(std::string_view text) {
    try {
        return fixed_from_hex<Digest>(text);
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("invalid digest '" + std::string(text) + "'");
    }
}

json user_to_json(const UserRegistrationData& d) {
    json j = json::object();
    for (const auto& f : text_fields()) j[std::string(f.name)] = d.*f.member;
    j["annualIncome"] = d.annualIncome;
    return j;
}

UserRegistrationData user_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("KYC record must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = key == "annualIncome";
        for (const auto& f : text_fields()) known = known || key == f.name;
        if (!known) throw std::invalid_argument("unknown KYC field '" + key + "'");
    }
    UserRegistrationData d;
    for (const auto& f : text_fields()) {
        auto it = j.find(std::string(f.name));
        if (it == j.end() || it->is_null()) continue;
        if (!it->is_string()) throw std::invalid_argument("field '" + std::string(f.name) + "' must be a string");
        d.*f.member = it->get<std::string>();
    }
    if (auto it = j.find("annualIncome"); it != j.end() && !it->is_null()) {
        if (it->is_number_unsigned()) {
            d.annualIncome = it->get<std::uint64_t>();
        } else if (it->is_number_integer()) {
            throw std::invalid_argument("Annual income must be a non-negative integer");
        } else if (it->is_string()) {
            const auto& s = it->get_ref<const std::string&>();
            if (s.empty()) {
                d.annualIncome = 0;
            } else {
                try {
                    auto w = parse_wei(s);
                    if (w > std::numeric_limits<std::uint64_t>::max()) throw AmountError("too large");
                    d.annualIncome = w.convert_to<std::uint64_t>();
                } catch (const AmountError&) {
                    throw std::invalid_argument("Annual income must be a non-negative integer");
                }
            }
        } else {
            throw std::invalid_argument("Annual income must be a non-negative integer");
        }
    }
    return d;
}

json arg_to_json(const EventArg& a) {
    return std::visit(
        [](const auto& v) -> json {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Address>) {
                return address_hex(v);
            } else {
                return format_wei(v);
            }
        },
        a);
}

json event_record(const Digest& tx_id, const Event& e) {
    json args = json::array();
    for (const auto& a : e.args) args.push_back(arg_to_json(a));
    return json{{"tx_id", to_hex(tx_id)}, {"name", event_name(e.name)}, {"args", args}};
}

Event event_from_record(const json& j) {
    auto name = parse_event_name(str_field(j, "name"));
    if (!name) throw std::invalid_argument("unknown event name");
    Event e{*name, {}};
    for (const auto& a : j.at("args")) {
        const auto& s = a.get_ref<const std::string&>();
        if (s.starts_with("0x")) {
            e.args.emplace_back(parse_address(s));
        } else {
            e.args.emplace_back(parse_wei(s));
        }
    }
    return e;
}

json receipt_to_json(const Receipt& r) {
    json events = json::array();
    for (const auto& e : r.events) events.push_back(event_record(r.tx_id, e));
    json j{{"tx_id", to_hex(r.tx_id)},     {"success", r.success},
           {"events", events},             {"gas_used", r.gas_used},
           {"elapsed_ms", r.elapsed_ms},   {"network_fee", format_wei(r.network_fee)},
           {"network_fee_eth", format_eth(r.network_fee)}};
    if (!r.success) {
        j["error"] = vm_error_name(r.error);
        j["error_message"] = r.error_message;
    }
    return j;
}

Receipt receipt_from_json(const json& j) {
    Receipt r;
    r.tx_id = parse_digest(str_field(j, "tx_id"));
    r.success = j.at("success").get<bool>();
    for (const auto& e : j.at("events")) r.events.push_back(event_from_record(e));
    r.gas_used = j.at("gas_used").get<std::uint64_t>();
    r.elapsed_ms = j.at("elapsed_ms").get<double>();
    r.network_fee = parse_wei(str_field(j, "network_fee"));
    if (!r.success) {
        r.error = parse_vm_error(str_field(j, "error")).value_or(VmErrorCode::None);
        r.error_message = str_field(j, "error_message");
    }
    return r;
}

json report_to_json(const IntegrityReport& r) {
    json j{{"valid", r.valid}};
    if (!r.valid) {
        j["height"] = r.height;
        j["reason"] = r.reason ? violation_name(*r.reason) : "unknown";
        j["detail"] = r.detail;
    }
    return j;
}

IntegrityReport report_from_json(const json& j) {
    IntegrityReport r;
    r.valid = j.at("valid").get<bool>();
    if (!r.valid) {
        r.height = j.at("height").get<std::uint64_t>();
        r.reason = parse_violation(str_field(j, "reason"));
        r.detail = j.value("detail", "");
    }
    return r;
}

json validation_to_json(const ValidationReport& r) {
    json failures = json::array();
    for (const auto& f : r.failures) failures.push_back({{"field", f.field}, {"message", f.message}});
    return json{{"ok", r.ok}, {"failures", failures}};
}

ValidationReport validation_from_json(const json& j) {
    ValidationReport r;
    for (const auto& f : j.at("failures")) r.failures.push_back({str_field(f, "field"), str_field(f, "message")});
    r.ok = r.failures.empty();
    return r;
}

json tx_to_json(const Transaction& tx) {
    return json{{"tx_id", to_hex(tx.tx_id)},
                {"sender", address_hex(tx.sender)},
                {"public_key", to_hex(tx.public_key)},
                {"operation", operation_name(tx.operation)},
                {"value", format_wei(tx.value)},
                {"payload", to_hex(tx.payload)},
                {"sequence", tx.sequence},
                {"signature", to_hex(tx.signature)},
                {"encoded", to_hex(tx.encode())}};
}

json kyc_record_to_json(const KycRecord& r) {
    json j{{"subject", address_hex(r.subject)},
           {"record", user_to_json(r.data)},
           {"gas_used", r.gas_used},
           {"network_fee", format_wei(r.network_fee)}};
    j["tx_id"] = r.tx_id ? json(to_hex(*r.tx_id)) : json(nullptr);
    j["id_file_digest"] = r.id_file_digest ? json(to_hex(*r.id_file_digest)) : json(nullptr);
    return j;
}

KycRecord kyc_record_from_json(const json& j) {
    KycRecord r;
    r.subject = parse_address(str_field(j, "subject"));
    r.data = user_from_json(j.at("record"));
    r.gas_used = j.at("gas_used").get<std::uint64_t>();
    r.network_fee = parse_wei(str_field(j, "network_fee"));
    if (j.contains("tx_id") && j.at("tx_id").is_string()) r.tx_id = parse_digest(str_field(j, "tx_id"));
    if (j.contains("id_file_digest") && j.at("id_file_digest").is_string())
        r.id_file_digest = parse_digest(str_field(j, "id_file_digest"));
    return r;
}

json kyc_token_to_json(const KycToken& t) {
    return json{{"token", to_hex(t.token)}, {"subject", address_hex(t.subject)}, {"tx_id", to_hex(t.tx_id)}};
}

KycToken kyc_token_from_json(const json& j) {
    return KycToken{parse_digest(str_field(j, "token")), parse_address(str_field(j, "subject")),
                    parse_digest(str_field(j, "tx_id"))};
}

json node_info_to_json(const NodeInfo& i) {
    return json{{"node_key", to_hex(i.node_key)},       {"kyc_key", to_hex(i.kyc_key)},
                {"owner", address_hex(i.owner)},        {"gas_price", format_wei(i.gas_price)},
                {"height", i.height},                   {"genesis_hash", to_hex(i.genesis_hash)}};
}

NodeInfo node_info_from_json(const json& j) {
    NodeInfo i;
    i.node_key = fixed_from_hex<PublicKey>(str_field(j, "node_key"));
    i.kyc_key = fixed_from_hex<PublicKey>(str_field(j, "kyc_key"));
    i.owner = parse_address(str_field(j, "owner"));
    i.gas_price = parse_wei(str_field(j, "gas_price"));
    i.height = j.at("height").get<std::uint64_t>();
    i.genesis_hash = parse_digest(str_field(j, "genesis_hash"));
    return i;
}

json error_to_json(const ApiError& e) {
    json j{{"error", e.code()}, {"message", e.what()}};
    if (e.receipt) j["receipt"] = receipt_to_json(*e.receipt);
    if (e.report) j["failures"] = validation_to_json(*e.report).at("failures");
    return j;
}

ApiError error_from_json(int status, const json& j) {
    std::string code = "Unknown";
    std::string message = "HTTP " + std::to_string(status);
    if (j.is_object()) {
        code = j.value("error", code);
        message = j.value("message", message);
    }
    ApiError e(status, code, message);
    if (j.is_object() && j.contains("receipt")) e.receipt = receipt_from_json(j.at("receipt"));
    if (j.is_object() && j.contains("failures")) e.report = validation_from_json(json{{"failures", j.at("failures")}});
    return e;
}

} // namespace albank
