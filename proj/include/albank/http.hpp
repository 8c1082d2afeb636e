#pragma once

// JSON over HTTP for the node API.
//
// Request and response bodies are JSON objects. Amounts are decimal wei
// strings, byte strings are lowercase hex, addresses carry a 0x prefix.
// Writes carry `Authorization: Bearer <session token>` and a body
// {"tx": "<hex of the canonical signed transaction>"}.
//
//   POST /auth/challenge          {"address"}                  -> {"nonce","expires_at"}
//   POST /auth/login              {"address","public_key","nonce","signature"}
//                                                              -> {"token","subject","expires_at"}
//   POST /bank/customers          {"tx"}                       -> receipt
//   POST /kyc                     {"tx"}                       -> {"receipt","token"}
//   GET  /kyc/{handle}                                         -> kyc record
//   POST /bank/deposit            {"tx"}                       -> receipt
//   POST /bank/withdraw           {"tx"}                       -> receipt
//   GET  /bank/balance/{address}                               -> {"address","balance","gas_used","network_fee"}
//   GET  /chain/tx/{tx_id}                                     -> {"tx","height","position","receipt"}
//   GET  /chain/verify                                         -> integrity report
//   GET  /chain/sequence/{address}                             -> {"address","next_sequence"}
//   GET  /node/info                                            -> node info
//   GET  /metrics                                              -> {"functions":{name:{...}}}
//
// Errors: {"error": code, "message": text} plus "receipt" on a revert and
// "failures" on ValidationFailed, with the status from ApiError.

#include "albank/api.hpp"
#include "albank/json_codec.hpp"
#include "albank/node.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace albank {

struct HttpRequest {
    std::string method;
    std::string path;
    std::string body;
    /// Session token without the "Bearer " prefix; empty when absent.
    std::string bearer;

    friend bool operator==(const HttpRequest&, const HttpRequest&) = default;
};

struct HttpResponse {
    int status = 200;
    std::string body;
};

/// Dispatches one request against a node. Never throws.
HttpResponse route(Node& node, const HttpRequest& request);

/// Serves route() on host:port from a background thread.
class HttpServer {
public:
    /// `static_dir`, when set, is served at "/" for the browser client.
    HttpServer(Node& node, std::string host, std::uint16_t port, std::filesystem::path static_dir = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving. Throws NodeStartError{PortInUse}.
    void start();
    /// Blocks until stop() is called from another thread.
    void wait();
    void stop();

    /// Actual bound port; differs from the requested one when that was 0.
    std::uint16_t port() const { return bound_port_; }

private:
    Node& node_;
    std::string host_;
    std::uint16_t port_;
    std::filesystem::path static_dir_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::uint16_t bound_port_ = 0;
};

/// The node could not be reached at all (connect failure, broken response).
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Transport {
public:
    virtual ~Transport() = default;
    /// Throws TransportError.
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real HTTP to an endpoint such as "http://127.0.0.1:8645".
class HttpTransport final : public Transport {
public:
    explicit HttpTransport(const std::string& endpoint);
    ~HttpTransport() override;
    HttpResponse send(const HttpRequest& request) override;

private:
    std::string endpoint_;
};

/// Calls route() in-process: the full wire encoding without a socket.
class LoopbackTransport final : public Transport {
public:
    explicit LoopbackTransport(Node& node) : node_(node) {}
    HttpResponse send(const HttpRequest& request) override { return route(node_, request); }

private:
    Node& node_;
};

/// Forwards to another transport and keeps every request it sent.
class RecordingTransport final : public Transport {
public:
    explicit RecordingTransport(Transport& inner) : inner_(inner) {}
    HttpResponse send(const HttpRequest& request) override {
        requests.push_back(request);
        return inner_.send(request);
    }

    std::vector<HttpRequest> requests;

private:
    Transport& inner_;
};

/// NodeApi spoken over a Transport. Non-2xx responses become ApiError with
/// the server's status, code and message.
class HttpNodeApi final : public NodeApi {
public:
    explicit HttpNodeApi(Transport& transport) : transport_(transport) {}

    NodeInfo info() override;
    Challenge challenge(const Address& address) override;
    SessionGrant login(const Address& address, const PublicKey& key, const NonceValue& nonce,
                       const Signature& signature) override;
    std::uint64_t next_sequence(const Address& address) override;

    Receipt add_customer(const std::string& session, const Transaction& tx) override;
    KycSubmitResult submit_kyc(const std::string& session, const Transaction& tx) override;
    Receipt deposit(const std::string& session, const Transaction& tx) override;
    Receipt withdraw(const std::string& session, const Transaction& tx) override;

    KycRecord fetch_kyc(const std::string& handle) override;
    BalanceView balance(const Address& address) override;
    TxRecord transaction(const Digest& tx_id) override;
    IntegrityReport verify() override;

    json metrics();

private:
    json call(const std::string& method, const std::string& path, const json& body = nullptr,
              const std::string& bearer = {});

    Transport& transport_;
};

json metrics_to_json(const std::map<std::string, FunctionMetrics>& metrics);
json tx_record_to_json(const TxRecord& r);
TxRecord tx_record_from_json(const json& j);

} // namespace albank
