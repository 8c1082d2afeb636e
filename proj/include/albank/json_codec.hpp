#pragma once

// JSON wire formats of the node API.
//
// Conventions: addresses are "0x"-prefixed lowercase hex; digests, keys,
// signatures and encoded transactions are bare lowercase hex; wei amounts are
// decimal strings; gas is a JSON integer.

#include "albank/api.hpp"

#include <nlohmann/json.hpp>

namespace albank {

using json = nlohmann::json;

std::string address_hex(const Address& a);
/// Throws std::invalid_argument.
Address parse_address(std::string_view text);
Digest parse_digest(std::string_view text);

json user_to_json(const UserRegistrationData& d);
/// Missing text fields read as empty. annualIncome must be a non-negative
/// integer (number or decimal string). Throws std::invalid_argument.
UserRegistrationData user_from_json(const json& j);

json arg_to_json(const EventArg& a);
/// Event log record: {"tx_id", "name", "args"}.
json event_record(const Digest& tx_id, const Event& e);
Event event_from_record(const json& j);

json receipt_to_json(const Receipt& r);
Receipt receipt_from_json(const json& j);

json report_to_json(const IntegrityReport& r);
IntegrityReport report_from_json(const json& j);

json validation_to_json(const ValidationReport& r);
ValidationReport validation_from_json(const json& j);

json tx_to_json(const Transaction& tx);

json kyc_record_to_json(const KycRecord& r);
KycRecord kyc_record_from_json(const json& j);

json kyc_token_to_json(const KycToken& t);
KycToken kyc_token_from_json(const json& j);

json node_info_to_json(const NodeInfo& i);
NodeInfo node_info_from_json(const json& j);

json error_to_json(const ApiError& e);
/// Rebuilds the ApiError a server sent.
ApiError error_from_json(int status, const json& j);

} // namespace albank
