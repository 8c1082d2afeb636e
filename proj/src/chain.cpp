#include "albank/chain.hpp"

#include "albank/crypto.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace albank {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'A', 'L', 'B', 'A', 'N', 'K', 'C', 'H'};
constexpr std::string_view kTxSigningTag = "albank/tx/v1";

void encode_unsigned_fields(Writer& w, const Transaction& tx) {
    w.fixed(tx.sender)
        .fixed(tx.public_key)
        .u8(tx.operation)
        .uint256(tx.value)
        .bytes(tx.payload)
        .u64(tx.sequence);
}

} // namespace

std::string operation_name(std::uint8_t op) {
    switch (static_cast<Operation>(op)) {
    case Operation::AddCustomer: return "AddCustomer";
    case Operation::RegisterKyc: return "RegisterKyc";
    case Operation::Deposit: return "Deposit";
    case Operation::Withdraw: return "Withdraw";
    }
    return "Unknown(" + std::to_string(op) + ")";
}

std::optional<Operation> parse_operation(std::string_view name) {
    for (auto op : {Operation::AddCustomer, Operation::RegisterKyc, Operation::Deposit, Operation::Withdraw})
        if (operation_name(static_cast<std::uint8_t>(op)) == name) return op;
    return std::nullopt;
}

Bytes Transaction::signing_bytes() const {
    Writer w;
    w.raw(to_bytes(kTxSigningTag));
    encode_unsigned_fields(w, *this);
    return std::move(w).take();
}

Digest Transaction::compute_id() const {
    Writer w;
    encode_unsigned_fields(w, *this);
    w.fixed(signature);
    return crypto::sha256(w.data());
}

bool Transaction::signature_valid() const {
    if (address_of(public_key) != sender) return false;
    return crypto::ed25519_verify(public_key, signing_bytes(), signature);
}

void Transaction::encode(Writer& w) const {
    encode_unsigned_fields(w, *this);
    w.fixed(signature).fixed(tx_id);
}

Transaction Transaction::decode(Reader& r) {
    Transaction tx;
    tx.sender = r.fixed<Address>();
    tx.public_key = r.fixed<PublicKey>();
    tx.operation = r.u8();
    tx.value = r.uint256();
    tx.payload = r.bytes();
    tx.sequence = r.u64();
    tx.signature = r.fixed<Signature>();
    tx.tx_id = r.fixed<Digest>();
    return tx;
}

Bytes Transaction::encode() const {
    Writer w;
    encode(w);
    return std::move(w).take();
}

Transaction Transaction::decode(ByteView data) {
    Reader r(data);
    auto tx = decode(r);
    r.expect_done();
    return tx;
}

Digest Block::compute_hash() const {
    Writer w;
    w.u64(height).fixed(prev_hash).u32(static_cast<std::uint32_t>(txs.size()));
    for (const auto& tx : txs) w.fixed(tx.compute_id());
    w.i64(timestamp_ms);
    return crypto::sha256(w.data());
}

void Block::encode(Writer& w) const {
    w.u64(height).fixed(prev_hash).i64(timestamp_ms).u32(static_cast<std::uint32_t>(txs.size()));
    for (const auto& tx : txs) tx.encode(w);
    w.fixed(block_hash);
}

Block Block::decode(Reader& r) {
    Block b;
    b.height = r.u64();
    b.prev_hash = r.fixed<Digest>();
    b.timestamp_ms = r.i64();
    auto n = r.u32();
    // Cap the count by the bytes left so a corrupt count cannot force a huge allocation.
    if (n > r.remaining()) throw DecodeError("transaction count exceeds record size");
    b.txs.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(Transaction::decode(r));
    b.block_hash = r.fixed<Digest>();
    return b;
}

Bytes Block::encode() const {
    Writer w;
    encode(w);
    return std::move(w).take();
}

std::string violation_name(Violation v) {
    switch (v) {
    case Violation::BadGenesis: return "bad-genesis";
    case Violation::HeightMismatch: return "height-mismatch";
    case Violation::LinkMismatch: return "link-mismatch";
    case Violation::HashMismatch: return "hash-mismatch";
    case Violation::BadSignature: return "bad-signature";
    case Violation::StaleSequence: return "stale-sequence";
    case Violation::DecodeError: return "decode-error";
    }
    return "unknown";
}

Chain Chain::genesis() {
    Block g;
    g.height = 0;
    g.timestamp_ms = 0;
    g.block_hash = g.compute_hash();
    Chain c;
    c.blocks_.push_back(std::move(g));
    return c;
}

Chain Chain::from_blocks(std::vector<Block> blocks) {
    Chain c;
    c.blocks_ = std::move(blocks);
    for (const auto& b : c.blocks_) c.index_block(b);
    return c;
}

void Chain::index_block(const Block& b) {
    for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
        const auto& tx = b.txs[i];
        tx_index_[tx.tx_id] = TxLocation{b.height, i};
        auto& last = sequences_[tx.sender];
        last = std::max(last, tx.sequence);
    }
}

std::uint64_t Chain::last_sequence(const Address& sender) const {
    auto it = sequences_.find(sender);
    return it == sequences_.end() ? 0 : it->second;
}

void Chain::check_admissible(const Transaction& tx) const {
    if (tx.compute_id() != tx.tx_id)
        throw ChainError(ChainError::Code::InvalidSignature, "transaction id does not match its contents");
    if (!tx.signature_valid())
        throw ChainError(ChainError::Code::InvalidSignature, "transaction signature does not verify");
    if (tx.sequence <= last_sequence(tx.sender))
        throw ChainError(ChainError::Code::StaleSequence,
                         "sequence " + std::to_string(tx.sequence) + " is not above last accepted " +
                             std::to_string(last_sequence(tx.sender)));
}

const Block& Chain::append_block(std::vector<Transaction> txs, const Clock& clock) {
    return commit(prepare_block(std::move(txs), clock));
}

Block Chain::prepare_block(std::vector<Transaction> txs, const Clock& clock) const {
    std::map<Address, std::uint64_t> pending;
    for (const auto& tx : txs) {
        check_admissible(tx);
        auto [it, fresh] = pending.try_emplace(tx.sender, tx.sequence);
        if (!fresh) {
            if (tx.sequence <= it->second)
                throw ChainError(ChainError::Code::StaleSequence, "sequence not increasing within block");
            it->second = tx.sequence;
        }
    }

    Block b;
    b.height = head().height + 1;
    b.prev_hash = head().block_hash;
    b.txs = std::move(txs);
    b.timestamp_ms = clock.wall_ms();
    b.block_hash = b.compute_hash();
    return b;
}

const Block& Chain::commit(Block block) {
    if (block.height != head().height + 1 || block.prev_hash != head().block_hash ||
        block.compute_hash() != block.block_hash)
        throw std::logic_error("commit: block does not extend the head");
    blocks_.push_back(std::move(block));
    index_block(blocks_.back());
    return blocks_.back();
}

std::optional<TxLocation> Chain::locate(const Digest& tx_id) const {
    auto it = tx_index_.find(tx_id);
    if (it == tx_index_.end()) return std::nullopt;
    return it->second;
}

TxLookup Chain::get_transaction(const Digest& tx_id) const {
    auto loc = locate(tx_id);
    if (!loc) throw ChainError(ChainError::Code::NotFound, "transaction " + to_hex(tx_id) + " not found");
    return TxLookup{blocks_[loc->height].txs[loc->position], *loc};
}

IntegrityReport verify_chain(const Chain& chain) {
    auto fail = [](std::uint64_t h, Violation v, std::string detail) {
        return IntegrityReport{false, h, v, std::move(detail)};
    };

    const auto& blocks = chain.blocks();
    if (blocks.empty()) return fail(0, Violation::BadGenesis, "chain has no blocks");

    std::map<Address, std::uint64_t> sequences;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto& b = blocks[i];
        if (b.height != i) return fail(i, Violation::HeightMismatch, "height field is " + std::to_string(b.height));
        if (i == 0) {
            if (!b.prev_hash.is_zero() || !b.txs.empty())
                return fail(0, Violation::BadGenesis, "genesis must have zero prev_hash and no transactions");
        } else if (b.prev_hash != blocks[i - 1].block_hash) {
            return fail(i, Violation::LinkMismatch, "prev_hash does not match block " + std::to_string(i - 1));
        }
        if (b.compute_hash() != b.block_hash)
            return fail(i, Violation::HashMismatch, "block hash does not recompute");
        for (std::size_t p = 0; p < b.txs.size(); ++p) {
            const auto& tx = b.txs[p];
            if (tx.compute_id() != tx.tx_id)
                return fail(i, Violation::HashMismatch, "tx " + std::to_string(p) + " id does not recompute");
            if (!tx.signature_valid())
                return fail(i, Violation::BadSignature, "tx " + std::to_string(p) + " signature invalid");
            auto& last = sequences[tx.sender];
            if (tx.sequence <= last)
                return fail(i, Violation::StaleSequence, "tx " + std::to_string(p) + " sequence not increasing");
            last = tx.sequence;
        }
    }
    return IntegrityReport::ok();
}

Bytes encode_file_header(const Digest& genesis_hash) {
    Writer w;
    w.raw(kMagic).u32(kChainFormatVersion).fixed(genesis_hash);
    return std::move(w).take();
}

Bytes encode_file_record(const Block& block) {
    Writer w;
    w.bytes(block.encode());
    return std::move(w).take();
}

Bytes serialize_chain(const Chain& chain) {
    Bytes out = encode_file_header(chain.blocks().front().block_hash);
    for (const auto& b : chain.blocks()) {
        auto rec = encode_file_record(b);
        out.insert(out.end(), rec.begin(), rec.end());
    }
    return out;
}

namespace {

struct ParsedFile {
    Digest genesis_hash;
    std::vector<Block> blocks;
};

ParsedFile parse_file(ByteView data) {
    Reader r(data);
    auto magic = r.raw(kMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw DecodeError("bad magic");
    auto version = r.u32();
    if (version != kChainFormatVersion)
        throw DecodeError("unsupported chain format version " + std::to_string(version));
    ParsedFile out;
    out.genesis_hash = r.fixed<Digest>();
    while (!r.done()) {
        auto record = r.bytes();
        Reader br(record);
        out.blocks.push_back(Block::decode(br));
        br.expect_done();
    }
    if (out.blocks.empty()) throw DecodeError("file holds no blocks");
    return out;
}

IntegrityReport verify_parsed(const ParsedFile& f, const Chain& chain) {
    auto report = verify_chain(chain);
    if (!report.valid) return report;
    if (f.genesis_hash != chain.blocks().front().block_hash)
        return IntegrityReport{false, 0, Violation::HashMismatch, "header genesis hash mismatch"};
    return report;
}

} // namespace

IntegrityReport verify_serialized(ByteView data) {
    ParsedFile parsed;
    try {
        parsed = parse_file(data);
    } catch (const DecodeError& e) {
        return IntegrityReport{false, 0, Violation::DecodeError, e.what()};
    }
    auto chain = Chain::from_blocks(std::move(parsed.blocks));
    return verify_parsed(parsed, chain);
}

Chain deserialize_chain(ByteView data) {
    ParsedFile parsed;
    try {
        parsed = parse_file(data);
    } catch (const DecodeError& e) {
        throw ChainError(ChainError::Code::CorruptFile, std::string("chain file corrupt: ") + e.what());
    }
    auto blocks = parsed.blocks;
    auto chain = Chain::from_blocks(std::move(blocks));
    auto report = verify_parsed(parsed, chain);
    if (!report.valid)
        throw ChainError(ChainError::Code::CorruptFile,
                         "chain file fails verification at height " + std::to_string(report.height) + ": " +
                             violation_name(*report.reason) + " (" + report.detail + ")");
    return chain;
}

namespace {

void write_all(int fd, ByteView data, const std::filesystem::path& path) {
    std::size_t off = 0;
    while (off < data.size()) {
        auto n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw ChainError(ChainError::Code::IoError, "write failed: " + path.string());
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) throw ChainError(ChainError::Code::IoError, "fsync failed: " + path.string());
}

struct Fd {
    int fd;
    ~Fd() {
        if (fd >= 0) ::close(fd);
    }
};

} // namespace

void save_chain(const Chain& chain, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        Fd f{::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644)};
        if (f.fd < 0) throw ChainError(ChainError::Code::IoError, "cannot open " + tmp.string());
        write_all(f.fd, serialize_chain(chain), tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ChainError(ChainError::Code::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

Chain load_chain(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ChainError(ChainError::Code::IoError, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw ChainError(ChainError::Code::IoError, "read failed: " + path.string());
    return deserialize_chain(data);
}

void append_chain_record(const std::filesystem::path& path, const Block& block) {
    Fd f{::open(path.c_str(), O_WRONLY | O_APPEND)};
    if (f.fd < 0) throw ChainError(ChainError::Code::IoError, "cannot open " + path.string());
    write_all(f.fd, encode_file_record(block), path);
}

} // namespace albank
