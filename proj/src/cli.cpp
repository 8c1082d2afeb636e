#include "albank/cli.hpp"

#include "albank/bench.hpp"
#include "albank/client.hpp"

#include <CLI11.hpp>

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace albank::cli {

namespace {

/// Local mistakes the user can fix by changing the command line.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string endpoint = "http://127.0.0.1:8645";
    std::string wallet = "albank.wallet";
    bool machine = false;
};

std::filesystem::path session_path(const std::string& wallet) { return wallet + ".session"; }

std::int64_t now_ms() { return SystemClock().wall_ms(); }

void write_private_file(const std::filesystem::path& path, const std::string& content) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd < 0) throw UsageError("cannot write " + path.string());
    auto n = ::write(fd, content.data(), content.size());
    ::close(fd);
    if (n != static_cast<ssize_t>(content.size())) throw UsageError("short write to " + path.string());
}

using ojson = nlohmann::ordered_json;

ojson ordered(const json& j) { return ojson::parse(j.dump()); }

class Printer {
public:
    Printer(std::ostream& out, bool machine) : out_(out), machine_(machine) {}

    /// Machine mode: the record as one JSON line. Human mode: aligned
    /// key/value lines.
    void record(const ojson& j) {
        if (machine_) {
            out_ << j.dump() << '\n';
            return;
        }
        std::size_t width = 0;
        for (const auto& [k, _] : j.items()) width = std::max(width, k.size());
        for (const auto& [k, v] : j.items())
            out_ << k << std::string(width - k.size() + 2, ' ') << (v.is_string() ? v.get<std::string>() : v.dump())
                 << '\n';
    }

    bool machine() const { return machine_; }
    std::ostream& out() { return out_; }

private:
    std::ostream& out_;
    bool machine_;
};

std::string event_text(const Event& e) {
    std::string s = event_name(e.name) + "(";
    for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) s += ", ";
        auto j = arg_to_json(e.args[i]);
        s += j.get<std::string>();
    }
    return s + ")";
}

ojson receipt_view(const Receipt& r, bool machine) {
    if (machine) return ordered(receipt_to_json(r));
    ojson j;
    j["tx_id"] = to_hex(r.tx_id);
    j["status"] = r.success ? "success" : "reverted: " + r.error_message;
    j["gas_used"] = std::to_string(r.gas_used);
    j["network_fee"] = format_wei(r.network_fee) + " wei (" + format_eth(r.network_fee) + " ETH)";
    std::string events;
    for (const auto& e : r.events) events += (events.empty() ? "" : " ") + event_text(e);
    j["events"] = events.empty() ? "-" : events;
    return j;
}

ojson kyc_view(const KycRecord& r, bool machine) {
    if (machine) return ordered(kyc_record_to_json(r));
    ojson j;
    j["subject"] = address_hex(r.subject);
    j["tx_id"] = r.tx_id ? to_hex(*r.tx_id) : "-";
    for (const auto& f : text_fields()) {
        if (std::string_view(f.name) == "idType") j["annualIncome"] = std::to_string(r.data.annualIncome);
        j[std::string(f.name)] = r.data.*f.member;
    }
    j["id_file_digest"] = r.id_file_digest ? to_hex(*r.id_file_digest) : "-";
    j["gas_used"] = std::to_string(r.gas_used);
    j["network_fee"] = format_wei(r.network_fee);
    return j;
}

Wallet open_wallet(const Options& o) {
    if (!std::filesystem::exists(o.wallet))
        throw UsageError("no wallet at " + o.wallet + " (run 'wallet new' or pass --wallet)");
    return load_wallet(o.wallet);
}

std::optional<SessionGrant> saved_session(const Options& o, const Wallet& w) {
    std::ifstream in(session_path(o.wallet));
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    try {
        SessionGrant g{j.at("token").get<std::string>(), parse_address(j.at("subject").get<std::string>()),
                       j.at("expires_at").get<std::int64_t>()};
        if (g.subject != w.address || g.expires_at <= now_ms()) return std::nullopt;
        return g;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

/// Logged-in client: the saved session when present and fresh, otherwise a
/// new challenge-response login that is kept in memory only.
BankClient session_client(NodeApi& api, const Options& o) {
    BankClient c(api, open_wallet(o));
    if (auto g = saved_session(o, c.wallet())) {
        c.set_session(g->token);
    } else {
        c.login();
    }
    return c;
}

/// Runs a write, logging in again once if the saved session was refused.
template <typename F>
auto with_session(NodeApi& api, const Options& o, F&& f) {
    auto c = session_client(api, o);
    try {
        return f(c);
    } catch (const ApiError& e) {
        if (e.status() != 401 || !saved_session(o, c.wallet())) throw;
        std::filesystem::remove(session_path(o.wallet));
        c.login();
        return f(c);
    }
}

KycSubmission read_submission(const std::string& file, const std::string& id_file) {
    std::ifstream in(file);
    if (!in) throw UsageError("cannot read " + file);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw UsageError(file + " is not valid JSON");
    KycSubmission s;
    try {
        s.data = user_from_json(j);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!id_file.empty()) {
        std::ifstream f(id_file, std::ios::binary);
        if (!f) throw UsageError("cannot read " + id_file);
        Bytes bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        s.id_file_digest = crypto::sha256(bytes);
    }
    return s;
}

std::string kyc_error_name(KycError::Code c) {
    switch (c) {
    case KycError::Code::ValidationFailed: return "ValidationFailed";
    case KycError::Code::UserRejected: return "UserRejected";
    case KycError::Code::AlreadyRegistered: return "AlreadyRegistered";
    case KycError::Code::NotFound: return "NotFound";
    case KycError::Code::InvalidAddress: return "InvalidAddress";
    case KycError::Code::DecryptionFailed: return "DecryptionFailed";
    }
    return "KycError";
}

Wei amount_arg(const std::string& text) {
    try {
        return parse_amount(text);
    } catch (const AmountError& e) {
        throw UsageError(std::string("bad amount '") + text + "': " + e.what());
    }
}

int run_node(const std::string& config_file, NodeConfig overrides, const std::vector<std::string>& set,
             const std::string& static_dir, Io& io) {
    NodeConfig cfg;
    try {
        if (!config_file.empty()) cfg = NodeConfig::load(config_file);
        cfg.apply_env();
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad node configuration: ") + e.what());
    }
    for (const auto& key : set) {
        if (key == "host") cfg.host = overrides.host;
        if (key == "port") cfg.port = overrides.port;
        if (key == "chain-file") cfg.chain_file = overrides.chain_file;
        if (key == "key-file") cfg.key_file = overrides.key_file;
        if (key == "gas-price") cfg.gas_price = overrides.gas_price;
    }

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Node node(cfg);
    HttpServer server(node, cfg.host, cfg.port, static_dir);
    server.start();
    auto info = node.info();
    io.out << "albank node listening on http://" << cfg.host << ':' << server.port() << '\n'
           << "owner " << address_hex(info.owner) << ", height " << info.height << ", gas price "
           << format_wei(info.gas_price) << " wei\n"
           << std::flush;

    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    node.shutdown();
    io.out << "stopped\n";
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, Io io) {
    if (!io.transport) io.transport = [](const std::string& e) { return std::make_unique<HttpTransport>(e); };

    CLI::App app{"albank: desk-scale bank node, wallet and tooling"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--endpoint", o.endpoint, "Node URL")->envname("ALBANK_ENDPOINT")->capture_default_str();
    app.add_option("--wallet", o.wallet, "Wallet file")->envname("ALBANK_WALLET")->capture_default_str();
    app.add_flag("--machine", o.machine, "One JSON record per line");

    std::function<int()> action;

    // node run
    auto* node_cmd = app.add_subcommand("node", "Run a bank node")->require_subcommand(1);
    auto* node_run = node_cmd->add_subcommand("run", "Serve the HTTP API until interrupted");
    std::string config_file, static_dir, gas_price_text;
    NodeConfig node_overrides;
    std::string chain_file_text, key_file_text;
    node_run->add_option("--config", config_file, "JSON config file");
    node_run->add_option("--host", node_overrides.host);
    node_run->add_option("--port", node_overrides.port);
    node_run->add_option("--chain-file", chain_file_text);
    node_run->add_option("--key-file", key_file_text);
    node_run->add_option("--gas-price", gas_price_text, "Wei per gas unit");
    node_run->add_option("--static-dir", static_dir, "Serve browser assets from this directory");
    node_run->callback([&] {
        action = [&] {
            std::vector<std::string> set;
            for (const char* k : {"host", "port", "chain-file", "key-file", "gas-price"})
                if (node_run->count(std::string("--") + k)) set.emplace_back(k);
            node_overrides.chain_file = chain_file_text;
            node_overrides.key_file = key_file_text;
            if (!gas_price_text.empty()) node_overrides.gas_price = amount_arg(gas_price_text + "wei");
            return run_node(config_file, node_overrides, set, static_dir, io);
        };
    });

    // wallet new | show
    auto* wallet_cmd = app.add_subcommand("wallet", "Manage the local wallet")->require_subcommand(1);
    auto* wallet_new = wallet_cmd->add_subcommand("new", "Create a wallet file");
    std::string seed;
    bool force = false;
    wallet_new->add_option("--seed", seed, "Derive the key from this text (reproducible wallets)");
    wallet_new->add_flag("--force", force, "Overwrite an existing wallet file");
    wallet_new->callback([&] {
        action = [&] {
            if (std::filesystem::exists(o.wallet) && !force)
                throw UsageError(o.wallet + " already exists (use --force to overwrite)");
            Bytes seed_bytes = to_bytes(seed);
            auto w = seed.empty() ? create_wallet() : create_wallet(ByteView(seed_bytes));
            std::filesystem::remove(o.wallet);
            save_wallet(w, o.wallet);
            Printer(io.out, o.machine)
                .record({{"address", address_hex(w.address)}, {"public_key", to_hex(w.public_key)}, {"file", o.wallet}});
            return int(kOk);
        };
    });
    auto* wallet_show = wallet_cmd->add_subcommand("show", "Print the wallet address and public key");
    wallet_show->callback([&] {
        action = [&] {
            auto w = open_wallet(o);
            Printer(io.out, o.machine)
                .record({{"address", address_hex(w.address)}, {"public_key", to_hex(w.public_key)}, {"file", o.wallet}});
            return int(kOk);
        };
    });

    // login
    auto* login_cmd = app.add_subcommand("login", "Challenge-response login");
    bool save_token = false;
    login_cmd->add_flag("--save-token", save_token, "Keep the session token next to the wallet (mode 0600)");
    login_cmd->callback([&] {
        action = [&] {
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto g = login_with_wallet(api, open_wallet(o));
            json j{{"token", g.token}, {"subject", address_hex(g.subject)}, {"expires_at", g.expires_at}};
            if (save_token) write_private_file(session_path(o.wallet), j.dump());
            Printer(io.out, o.machine).record(ordered(j));
            return int(kOk);
        };
    });

    // customer add
    auto* customer_cmd = app.add_subcommand("customer", "Customer registry")->require_subcommand(1);
    auto* customer_add = customer_cmd->add_subcommand("add", "Register this wallet as a customer");
    customer_add->callback([&] {
        action = [&] {
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto r = with_session(api, o, [](BankClient& c) { return c.add_customer(); });
            Printer(io.out, o.machine).record(receipt_view(r, o.machine));
            return int(kOk);
        };
    });

    // kyc submit | get
    auto* kyc_cmd = app.add_subcommand("kyc", "KYC records")->require_subcommand(1);
    auto* kyc_submit = kyc_cmd->add_subcommand("submit", "Validate, approve, encrypt and submit a KYC record");
    std::string record_file, id_file;
    bool yes = false;
    kyc_submit->add_option("--file", record_file, "JSON record with the nineteen fields")->required();
    kyc_submit->add_option("--id-file", id_file, "ID document; only its digest is submitted");
    kyc_submit->add_flag("--yes", yes, "Approve without prompting");
    kyc_submit->callback([&] {
        action = [&] {
            auto submission = read_submission(record_file, id_file);
            auto approve = [&](const UserRegistrationData& d) {
                if (yes) return true;
                io.err << "Submit KYC record for " << d.firstName << ' ' << d.lastName << " to " << o.endpoint
                       << "? [y/N] " << std::flush;
                std::string answer;
                std::getline(io.in, answer);
                return answer == "y" || answer == "Y" || answer == "yes";
            };
            try {
                // Invalid records never reach the node, not even for login.
                if (auto report = validate_kyc(submission.data); !report.ok) {
                    auto message = report.failures.front().message;
                    throw KycError(KycError::Code::ValidationFailed, message, std::move(report));
                }
                auto transport = io.transport(o.endpoint);
                HttpNodeApi api(*transport);
                auto r = with_session(api, o, [&](BankClient& c) { return c.submit_kyc(submission, approve); });
                json j{{"token", to_hex(r.token.token)},
                       {"subject", address_hex(r.token.subject)},
                       {"tx_id", to_hex(r.token.tx_id)},
                       {"gas_used", o.machine ? json(r.receipt.gas_used) : json(std::to_string(r.receipt.gas_used))},
                       {"network_fee", format_wei(r.receipt.network_fee)}};
                Printer(io.out, o.machine).record(ordered(j));
                return int(kOk);
            } catch (const KycError& e) {
                if (o.machine) {
                    io.out << json{{"error", kyc_error_name(e.code())},
                                   {"message", e.what()},
                                   {"failures", validation_to_json(e.report()).at("failures")}}
                                  .dump()
                           << '\n';
                } else {
                    io.err << "error: " << e.what() << '\n';
                    for (const auto& f : e.report().failures) io.err << "  " << f.field << ": " << f.message << '\n';
                }
                return int(kServerFailure);
            }
        };
    });
    auto* kyc_get = kyc_cmd->add_subcommand("get", "Fetch a KYC record by token, tx id or address");
    std::string handle;
    kyc_get->add_option("handle", handle)->required();
    kyc_get->callback([&] {
        action = [&] {
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            Printer(io.out, o.machine).record(kyc_view(api.fetch_kyc(handle), o.machine));
            return int(kOk);
        };
    });

    // deposit | withdraw
    std::string amount_text;
    auto* deposit_cmd = app.add_subcommand("deposit", "Deposit AMOUNT (e.g. 1eth, 0.5, 100wei; bare numbers are ETH)");
    deposit_cmd->add_option("amount", amount_text)->required();
    deposit_cmd->callback([&] {
        action = [&] {
            auto amount = amount_arg(amount_text);
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto r = with_session(api, o, [&](BankClient& c) { return c.deposit(amount); });
            Printer(io.out, o.machine).record(receipt_view(r, o.machine));
            return int(kOk);
        };
    });
    auto* withdraw_cmd = app.add_subcommand("withdraw", "Withdraw AMOUNT (same units as deposit)");
    withdraw_cmd->add_option("amount", amount_text)->required();
    withdraw_cmd->callback([&] {
        action = [&] {
            auto amount = amount_arg(amount_text);
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto r = with_session(api, o, [&](BankClient& c) { return c.withdraw(amount); });
            Printer(io.out, o.machine).record(receipt_view(r, o.machine));
            return int(kOk);
        };
    });

    // balance
    auto* balance_cmd = app.add_subcommand("balance", "Bank balance of ADDRESS (default: this wallet)");
    std::string address_text;
    balance_cmd->add_option("address", address_text);
    balance_cmd->callback([&] {
        action = [&] {
            Address a;
            if (address_text.empty()) {
                a = open_wallet(o).address;
            } else {
                try {
                    a = parse_address(address_text);
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto b = api.balance(a);
            if (o.machine) {
                io.out << json{{"address", address_hex(b.address)},
                               {"balance", format_wei(b.balance)},
                               {"gas_used", b.gas_used},
                               {"network_fee", format_wei(b.network_fee)}}
                              .dump()
                       << '\n';
            } else {
                Printer(io.out, false)
                    .record({{"address", address_hex(b.address)},
                             {"balance", format_wei(b.balance) + " wei (" + format_eth(b.balance) + " ETH)"}});
            }
            return int(kOk);
        };
    });

    // tx
    auto* tx_cmd = app.add_subcommand("tx", "Look up a sealed transaction");
    std::string tx_text;
    tx_cmd->add_option("txid", tx_text)->required();
    tx_cmd->callback([&] {
        action = [&] {
            Digest id;
            try {
                id = parse_digest(tx_text);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            auto r = api.transaction(id);
            if (o.machine) {
                io.out << tx_record_to_json(r).dump() << '\n';
            } else {
                Printer p(io.out, false);
                p.record({{"tx_id", to_hex(r.tx.tx_id)},
                          {"block", std::to_string(r.location.height)},
                          {"sender", address_hex(r.tx.sender)},
                          {"operation", function_display_name(r.tx.operation)},
                          {"value", format_wei(r.tx.value)},
                          {"sequence", std::to_string(r.tx.sequence)}});
                if (r.receipt) p.record(receipt_view(*r.receipt, false));
            }
            return int(kOk);
        };
    });

    // chain verify
    auto* chain_cmd = app.add_subcommand("chain", "Ledger inspection")->require_subcommand(1);
    auto* chain_verify = chain_cmd->add_subcommand("verify", "Verify the node's chain, or a chain file offline");
    std::string verify_file;
    chain_verify->add_option("--file", verify_file, "Verify this chain file without a node");
    chain_verify->callback([&] {
        action = [&] {
            IntegrityReport report;
            if (!verify_file.empty()) {
                std::ifstream in(verify_file, std::ios::binary);
                if (!in) throw UsageError("cannot read " + verify_file);
                Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                report = verify_serialized(data);
            } else {
                auto transport = io.transport(o.endpoint);
                HttpNodeApi api(*transport);
                report = api.verify();
            }
            Printer(io.out, o.machine).record(ordered(report_to_json(report)));
            return int(report.valid ? kOk : kServerFailure);
        };
    });

    // bench run
    auto* bench_cmd = app.add_subcommand("bench", "Measurement suite")->require_subcommand(1);
    auto* bench_run = bench_cmd->add_subcommand("run", "Run every function N times and export the table");
    std::uint32_t samples = 10;
    std::string out_file, format_text = "csv";
    bench_run->add_option("--samples", samples)->check(CLI::PositiveNumber)->capture_default_str();
    bench_run->add_option("--out", out_file, "Output file (default: stdout)");
    bench_run->add_option("--format", format_text)->check(CLI::IsMember({"csv", "long"}))->capture_default_str();
    bench_run->callback([&] {
        action = [&] {
            auto transport = io.transport(o.endpoint);
            HttpNodeApi api(*transport);
            BenchOptions opts;
            opts.samples = samples;
            auto rows = run_suite(api, opts);
            auto format = parse_export_format(format_text);
            if (out_file.empty()) {
                export_rows(rows, io.out, format);
            } else {
                export_rows(rows, std::filesystem::path(out_file), format);
                io.err << rows.size() << " rows written to " << out_file << '\n';
            }
            return int(kOk);
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, io.out, io.err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        return action ? action() : int(kUsage);
    } catch (const UsageError& e) {
        io.err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const TransportError& e) {
        io.err << "error: " << e.what() << '\n';
        return kConnectivity;
    } catch (const BenchError& e) {
        io.err << "error: " << e.what() << '\n';
        return e.code() == BenchError::Code::NodeUnreachable ? kConnectivity : kServerFailure;
    } catch (const ApiError& e) {
        if (o.machine) {
            io.out << error_to_json(e).dump() << '\n';
        }
        io.err << "error: " << e.what() << '\n';
        return kServerFailure;
    } catch (const NodeStartError& e) {
        io.err << "error: " << e.what() << '\n';
        return e.code() == NodeStartError::Code::BadConfig ? kUsage : kServerFailure;
    } catch (const std::exception& e) {
        io.err << "error: " << e.what() << '\n';
        return kServerFailure;
    }
}

} // namespace albank::cli
