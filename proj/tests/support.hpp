#pragma once

#include "albank/bankvm.hpp"
#include "albank/node.hpp"
#include "albank/wallet.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <random>
#include <string>

namespace albank::test {

/// Reproducible wallet number n.
inline Wallet wallet(int n) {
    auto seed = to_bytes("test-wallet-" + std::to_string(n));
    return create_wallet(ByteView(seed));
}

inline UserRegistrationData sample_record() {
    UserRegistrationData d;
    d.firstName = "Grace";
    d.middleName = "B";
    d.lastName = "Hopper";
    d.dob = "1906-12-09";
    d.email = "grace.hopper@example.org";
    d.phone = "+12025550147";
    d.maritalStatus = "Married";
    d.address_ = "1 Navy Yard";
    d.city = "Arlington";
    d.state = "VA";
    d.country = "USA";
    d.zip = "22202";
    d.nationality = "American";
    d.occupation = "Rear Admiral";
    d.employmentStatus = "Retired";
    d.annualIncome = 120000;
    d.idType = "Passport";
    d.idNumber = "X12345678";
    d.idExpiry = "2031-06-30";
    return d;
}

/// Directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("albank-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Contents of tests/golden/<name>. With ALBANK_UPDATE_GOLDEN=1 in the
/// environment the file is first rewritten from `actual`.
inline std::string golden(const std::string& name, const std::string& actual) {
    const std::filesystem::path path = std::filesystem::path(ALBANK_GOLDEN_DIR) / name;
    if (const char* u = std::getenv("ALBANK_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        std::ofstream(path, std::ios::binary) << actual;
    }
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline NodeConfig memory_config() {
    NodeConfig c;
    c.port = 0;
    return c;
}

inline NodeConfig file_config(const TempDir& dir) {
    NodeConfig c = memory_config();
    c.chain_file = dir / "chain.bin";
    return c;
}

} // namespace albank::test
