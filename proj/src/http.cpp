#include "albank/http.hpp"

#include <httplib.h>

namespace albank {

namespace {

HttpResponse json_response(int status, const json& body) { return HttpResponse{status, body.dump()}; }

HttpResponse error_response(const ApiError& e) { return json_response(e.status(), error_to_json(e)); }

const std::string& body_string(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body.at(key).is_string())
        throw ApiError(400, "BadRequest", std::string("missing string field '") + key + "'");
    return body.at(key).get_ref<const std::string&>();
}

Transaction body_tx(const json& body) {
    try {
        return Transaction::decode(from_hex(body_string(body, "tx")));
    } catch (const ApiError&) {
        throw;
    } catch (const std::exception& e) {
        throw ApiError(400, "BadRequest", std::string("malformed transaction: ") + e.what());
    }
}

template <typename T, typename F>
T parse_or_400(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ApiError(400, "BadRequest", e.what());
    }
}

Address path_address(std::string_view s) {
    return parse_or_400<Address>([&] { return parse_address(s); });
}

json balance_to_json(const BalanceView& b) {
    return json{{"address", address_hex(b.address)},
                {"balance", format_wei(b.balance)},
                {"gas_used", b.gas_used},
                {"network_fee", format_wei(b.network_fee)}};
}

HttpResponse dispatch(Node& node, const HttpRequest& req) {
    const std::string_view path = req.path;
    json body = json::object();
    if (req.method == "POST" && !req.body.empty()) {
        body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw ApiError(400, "BadRequest", "request body is not valid JSON");
    }

    auto suffix = [&](std::string_view prefix) -> std::optional<std::string_view> {
        if (path.size() > prefix.size() && path.starts_with(prefix)) return path.substr(prefix.size());
        return std::nullopt;
    };
    auto bad_method = [&] { return json_response(405, {{"error", "MethodNotAllowed"}, {"message", req.method}}); };

    if (path == "/auth/challenge") {
        if (req.method != "POST") return bad_method();
        auto c = node.challenge(path_address(body_string(body, "address")));
        return json_response(200, {{"nonce", to_hex(c.nonce)}, {"expires_at", c.expires_at}});
    }
    if (path == "/auth/login") {
        if (req.method != "POST") return bad_method();
        auto address = path_address(body_string(body, "address"));
        auto key = parse_or_400<PublicKey>([&] { return fixed_from_hex<PublicKey>(body_string(body, "public_key")); });
        auto nonce = parse_or_400<NonceValue>([&] { return fixed_from_hex<NonceValue>(body_string(body, "nonce")); });
        auto sig = parse_or_400<Signature>([&] { return fixed_from_hex<Signature>(body_string(body, "signature")); });
        auto g = node.login(address, key, nonce, sig);
        return json_response(200,
                             {{"token", g.token}, {"subject", address_hex(g.subject)}, {"expires_at", g.expires_at}});
    }
    if (path == "/bank/customers") {
        if (req.method != "POST") return bad_method();
        return json_response(200, receipt_to_json(node.add_customer(req.bearer, body_tx(body))));
    }
    if (path == "/bank/deposit") {
        if (req.method != "POST") return bad_method();
        return json_response(200, receipt_to_json(node.deposit(req.bearer, body_tx(body))));
    }
    if (path == "/bank/withdraw") {
        if (req.method != "POST") return bad_method();
        return json_response(200, receipt_to_json(node.withdraw(req.bearer, body_tx(body))));
    }
    if (path == "/kyc") {
        if (req.method != "POST") return bad_method();
        auto r = node.submit_kyc(req.bearer, body_tx(body));
        return json_response(200, {{"receipt", receipt_to_json(r.receipt)}, {"token", kyc_token_to_json(r.token)}});
    }
    if (auto handle = suffix("/kyc/")) {
        if (req.method != "GET") return bad_method();
        return json_response(200, kyc_record_to_json(node.fetch_kyc(std::string(*handle))));
    }
    if (auto a = suffix("/bank/balance/")) {
        if (req.method != "GET") return bad_method();
        return json_response(200, balance_to_json(node.balance(path_address(*a))));
    }
    if (auto id = suffix("/chain/tx/")) {
        if (req.method != "GET") return bad_method();
        auto digest = parse_or_400<Digest>([&] { return parse_digest(*id); });
        return json_response(200, tx_record_to_json(node.transaction(digest)));
    }
    if (path == "/chain/verify") {
        if (req.method != "GET") return bad_method();
        return json_response(200, report_to_json(node.verify()));
    }
    if (auto a = suffix("/chain/sequence/")) {
        if (req.method != "GET") return bad_method();
        auto address = path_address(*a);
        return json_response(200, {{"address", address_hex(address)}, {"next_sequence", node.next_sequence(address)}});
    }
    if (path == "/node/info") {
        if (req.method != "GET") return bad_method();
        return json_response(200, node_info_to_json(node.info()));
    }
    if (path == "/metrics") {
        if (req.method != "GET") return bad_method();
        return json_response(200, metrics_to_json(node.metrics()));
    }
    return json_response(404, {{"error", "NoRoute"}, {"message", "no endpoint " + req.method + " " + req.path}});
}

} // namespace

json metrics_to_json(const std::map<std::string, FunctionMetrics>& metrics) {
    json fns = json::object();
    for (const auto& [name, m] : metrics)
        fns[name] = {{"count", m.count},
                     {"failures", m.failures},
                     {"total_gas", m.total_gas},
                     {"total_elapsed_ms", m.total_elapsed_ms},
                     {"total_fee", format_wei(m.total_fee)}};
    return json{{"functions", fns}};
}

json tx_record_to_json(const TxRecord& r) {
    json j{{"tx", tx_to_json(r.tx)}, {"height", r.location.height}, {"position", r.location.position}};
    j["receipt"] = r.receipt ? receipt_to_json(*r.receipt) : json(nullptr);
    return j;
}

TxRecord tx_record_from_json(const json& j) {
    TxRecord r;
    r.tx = Transaction::decode(from_hex(j.at("tx").at("encoded").get<std::string>()));
    r.location.height = j.at("height").get<std::uint64_t>();
    r.location.position = j.at("position").get<std::uint32_t>();
    if (j.contains("receipt") && j.at("receipt").is_object()) r.receipt = receipt_from_json(j.at("receipt"));
    return r;
}

HttpResponse route(Node& node, const HttpRequest& request) {
    try {
        return dispatch(node, request);
    } catch (const ApiError& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(ApiError(400, "BadRequest", e.what()));
    } catch (const std::invalid_argument& e) {
        return error_response(ApiError(400, "BadRequest", e.what()));
    } catch (const std::exception& e) {
        return error_response(ApiError(500, "Internal", e.what()));
    }
}

HttpServer::HttpServer(Node& node, std::string host, std::uint16_t port, std::filesystem::path static_dir)
    : node_(node), host_(std::move(host)), port_(port), static_dir_(std::move(static_dir)),
      server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        HttpRequest r{req.method, req.path, req.body, {}};
        auto auth = req.get_header_value("Authorization");
        if (auth.starts_with("Bearer ")) r.bearer = auth.substr(7);
        auto out = route(node_, r);
        res.status = out.status;
        res.set_content(out.body, "application/json");
    };
    // SO_REUSEADDR only: the library default also sets SO_REUSEPORT, which
    // would let a second node silently share the port.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server_->Get(".*", handler);
    server_->Post(".*", handler);
    server_->Put(".*", handler);
    server_->Delete(".*", handler);
    server_->Patch(".*", handler);
    if (!static_dir_.empty()) server_->set_mount_point("/", static_dir_.string());
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
    if (port_ == 0) {
        int p = server_->bind_to_any_port(host_);
        if (p <= 0) throw NodeStartError(NodeStartError::Code::PortInUse, "cannot bind " + host_);
        bound_port_ = static_cast<std::uint16_t>(p);
    } else {
        if (!server_->bind_to_port(host_, port_))
            throw NodeStartError(NodeStartError::Code::PortInUse,
                                 "cannot bind " + host_ + ":" + std::to_string(port_) + " (port in use?)");
        bound_port_ = port_;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void HttpServer::wait() {
    if (thread_.joinable()) thread_.join();
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

HttpTransport::HttpTransport(const std::string& endpoint) : endpoint_(endpoint) {
    while (endpoint_.ends_with('/')) endpoint_.pop_back();
}

HttpTransport::~HttpTransport() = default;

HttpResponse HttpTransport::send(const HttpRequest& request) {
    httplib::Client client(endpoint_);
    if (!client.is_valid()) throw TransportError("invalid endpoint '" + endpoint_ + "'");
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
    httplib::Headers headers;
    if (!request.bearer.empty()) headers.emplace("Authorization", "Bearer " + request.bearer);

    httplib::Result res;
    const auto& m = request.method;
    if (m == "POST") {
        res = client.Post(request.path, headers, request.body, "application/json");
    } else if (m == "PUT") {
        res = client.Put(request.path, headers, request.body, "application/json");
    } else if (m == "DELETE") {
        res = client.Delete(request.path, headers);
    } else if (m == "GET") {
        res = client.Get(request.path, headers);
    } else {
        throw TransportError("unsupported method " + m);
    }
    if (!res) throw TransportError("cannot reach " + endpoint_ + ": " + httplib::to_string(res.error()));
    return HttpResponse{res->status, res->body};
}

json HttpNodeApi::call(const std::string& method, const std::string& path, const json& body,
                       const std::string& bearer) {
    HttpRequest req{method, path, body.is_null() ? std::string() : body.dump(), bearer};
    auto res = transport_.send(req);
    json parsed = json::parse(res.body, nullptr, false);
    if (res.status / 100 != 2) {
        if (parsed.is_discarded()) parsed = nullptr;
        throw error_from_json(res.status, parsed);
    }
    if (parsed.is_discarded()) throw TransportError("node returned a non-JSON body for " + path);
    return parsed;
}

NodeInfo HttpNodeApi::info() { return node_info_from_json(call("GET", "/node/info")); }

Challenge HttpNodeApi::challenge(const Address& address) {
    auto j = call("POST", "/auth/challenge", {{"address", address_hex(address)}});
    return Challenge{fixed_from_hex<NonceValue>(j.at("nonce").get<std::string>()), j.at("expires_at").get<std::int64_t>()};
}

SessionGrant HttpNodeApi::login(const Address& address, const PublicKey& key, const NonceValue& nonce,
                                const Signature& signature) {
    auto j = call("POST", "/auth/login",
                  {{"address", address_hex(address)},
                   {"public_key", to_hex(key)},
                   {"nonce", to_hex(nonce)},
                   {"signature", to_hex(signature)}});
    return SessionGrant{j.at("token").get<std::string>(), parse_address(j.at("subject").get<std::string>()),
                        j.at("expires_at").get<std::int64_t>()};
}

std::uint64_t HttpNodeApi::next_sequence(const Address& address) {
    return call("GET", "/chain/sequence/" + address_hex(address)).at("next_sequence").get<std::uint64_t>();
}

Receipt HttpNodeApi::add_customer(const std::string& session, const Transaction& tx) {
    return receipt_from_json(call("POST", "/bank/customers", {{"tx", to_hex(tx.encode())}}, session));
}

KycSubmitResult HttpNodeApi::submit_kyc(const std::string& session, const Transaction& tx) {
    auto j = call("POST", "/kyc", {{"tx", to_hex(tx.encode())}}, session);
    return KycSubmitResult{receipt_from_json(j.at("receipt")), kyc_token_from_json(j.at("token"))};
}

Receipt HttpNodeApi::deposit(const std::string& session, const Transaction& tx) {
    return receipt_from_json(call("POST", "/bank/deposit", {{"tx", to_hex(tx.encode())}}, session));
}

Receipt HttpNodeApi::withdraw(const std::string& session, const Transaction& tx) {
    return receipt_from_json(call("POST", "/bank/withdraw", {{"tx", to_hex(tx.encode())}}, session));
}

KycRecord HttpNodeApi::fetch_kyc(const std::string& handle) {
    return kyc_record_from_json(call("GET", "/kyc/" + handle));
}

BalanceView HttpNodeApi::balance(const Address& address) {
    auto j = call("GET", "/bank/balance/" + address_hex(address));
    return BalanceView{parse_address(j.at("address").get<std::string>()), parse_wei(j.at("balance").get<std::string>()),
                       j.at("gas_used").get<std::uint64_t>(), parse_wei(j.at("network_fee").get<std::string>())};
}

TxRecord HttpNodeApi::transaction(const Digest& tx_id) {
    return tx_record_from_json(call("GET", "/chain/tx/" + to_hex(tx_id)));
}

IntegrityReport HttpNodeApi::verify() { return report_from_json(call("GET", "/chain/verify")); }

json HttpNodeApi::metrics() { return call("GET", "/metrics"); }

} // namespace albank
