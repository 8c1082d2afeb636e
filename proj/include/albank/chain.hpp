#pragma once

#include "albank/amount.hpp"
#include "albank/clock.hpp"
#include "albank/encoding.hpp"
#include "albank/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace albank {

enum class Operation : std::uint8_t {
    AddCustomer = 1,
    RegisterKyc = 2,
    Deposit = 3,
    Withdraw = 4,
};

std::string operation_name(std::uint8_t op);
std::optional<Operation> parse_operation(std::string_view name);

/// A signed request to the bank contract.
///
/// `operation` is kept as the raw wire byte so that a well-signed transaction
/// carrying an unknown opcode still reaches the contract (which rejects it).
struct Transaction {
    Address sender;
    PublicKey public_key;
    std::uint8_t operation = 0;
    Wei value = 0;
    Bytes payload;
    std::uint64_t sequence = 0;
    Signature signature;
    Digest tx_id;

    /// Message covered by the signature: every field except signature and tx_id.
    Bytes signing_bytes() const;
    /// Digest over every field except tx_id.
    Digest compute_id() const;
    /// Signature verifies under public_key, and public_key hashes to sender.
    bool signature_valid() const;

    void encode(Writer& w) const;
    static Transaction decode(Reader& r);
    Bytes encode() const;
    static Transaction decode(ByteView data);

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct Block {
    std::uint64_t height = 0;
    Digest prev_hash;
    std::vector<Transaction> txs;
    std::int64_t timestamp_ms = 0;
    Digest block_hash;

    /// Hash over (height, prev_hash, recomputed tx ids, timestamp).
    Digest compute_hash() const;

    void encode(Writer& w) const;
    static Block decode(Reader& r);
    Bytes encode() const;

    friend bool operator==(const Block&, const Block&) = default;
};

class ChainError : public std::runtime_error {
public:
    enum class Code { InvalidSignature, StaleSequence, NotFound, CorruptFile, IoError };

    ChainError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class Violation {
    BadGenesis,
    HeightMismatch,
    LinkMismatch,
    HashMismatch,
    BadSignature,
    StaleSequence,
    DecodeError,
};

std::string violation_name(Violation v);

struct IntegrityReport {
    bool valid = true;
    std::uint64_t height = 0;
    std::optional<Violation> reason;
    std::string detail;

    static IntegrityReport ok() { return {}; }
};

struct TxLocation {
    std::uint64_t height = 0;
    std::uint32_t position = 0;

    friend bool operator==(const TxLocation&, const TxLocation&) = default;
};

struct TxLookup {
    const Transaction& tx;
    TxLocation location;
};

/// Append-only list of hash-linked blocks plus a tx_id index.
///
/// Not internally synchronized: callers serialize appends and may share
/// const access between readers.
class Chain {
public:
    /// One block at height 0 with zero prev_hash, no transactions and
    /// timestamp 0, so every chain starts from the same genesis hash.
    static Chain genesis();

    /// Adopts blocks as-is (no verification). Used by the file loader and by
    /// tests that build forged histories; pair with verify_chain.
    static Chain from_blocks(std::vector<Block> blocks);

    /// Throws ChainError{InvalidSignature|StaleSequence}; on error the chain
    /// is unchanged.
    const Block& append_block(std::vector<Transaction> txs, const Clock& clock);

    /// append_block split in two so a caller can persist the block before
    /// it becomes visible. prepare_block runs every admission check; commit
    /// only accepts the direct successor of head().
    Block prepare_block(std::vector<Transaction> txs, const Clock& clock) const;
    const Block& commit(Block block);

    /// Same admission checks as append_block without appending.
    void check_admissible(const Transaction& tx) const;

    /// Highest accepted sequence for sender, 0 if none.
    std::uint64_t last_sequence(const Address& sender) const;

    /// Throws ChainError{NotFound}.
    TxLookup get_transaction(const Digest& tx_id) const;
    std::optional<TxLocation> locate(const Digest& tx_id) const;

    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& head() const { return blocks_.back(); }
    std::size_t size() const { return blocks_.size(); }

private:
    void index_block(const Block& b);

    std::vector<Block> blocks_;
    std::map<Digest, TxLocation> tx_index_;
    std::map<Address, std::uint64_t> sequences_;
};

IntegrityReport verify_chain(const Chain& chain);

// Chain file, format version 1:
//
//   "ALBANKCH"        8-byte magic
//   u32               format version (1)
//   digest            genesis block hash
//   repeated record:  u32 length, canonical block encoding
//
// Each appended block is one record, so the file can be extended in place.
constexpr std::uint32_t kChainFormatVersion = 1;

Bytes serialize_chain(const Chain& chain);
Bytes encode_file_header(const Digest& genesis_hash);
Bytes encode_file_record(const Block& block);

/// Parses and verifies; throws ChainError{CorruptFile}.
Chain deserialize_chain(ByteView data);
/// Never throws: decode failures are reported as DecodeError violations.
IntegrityReport verify_serialized(ByteView data);

/// Writes atomically (temp file + rename). Throws ChainError{IoError}.
void save_chain(const Chain& chain, const std::filesystem::path& path);
/// Throws ChainError{IoError|CorruptFile}.
Chain load_chain(const std::filesystem::path& path);

/// Appends one record to an existing chain file and fsyncs it before
/// returning. Throws ChainError{IoError}.
void append_chain_record(const std::filesystem::path& path, const Block& block);

} // namespace albank
