#include "albank/wallet.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/stat.h>

#include <atomic>
#include <thread>

using namespace albank;
using albank::test::wallet;

namespace {

crypto::SecretSeed server_seed() {
    crypto::SecretSeed s{};
    s.fill(0x42);
    return s;
}

struct AuthFixture : ::testing::Test {
    FixedClock clock;
    TokenAuthority tokens{server_seed(), std::chrono::seconds(3600), clock};
    Authenticator auth{tokens, std::chrono::seconds(300), clock};
};

AuthError::Code auth_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const AuthError& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected AuthError";
    return AuthError::Code::TokenMalformed;
}

} // namespace

TEST(Wallet, SeededWalletsAreDeterministic) {
    EXPECT_EQ(wallet(1).address, wallet(1).address);
    EXPECT_NE(wallet(1).address, wallet(2).address);
    auto random1 = create_wallet(), random2 = create_wallet();
    EXPECT_NE(random1.address, random2.address);
    auto w = wallet(5);
    EXPECT_EQ(w.address, address_of(w.public_key));
    EXPECT_EQ(wallet_from_private_key(w.private_key).address, w.address);
}

TEST(Wallet, FileRoundTripIsOwnerOnly) {
    test::TempDir dir;
    auto w = wallet(1);
    save_wallet(w, dir / "w");
    auto loaded = load_wallet(dir / "w");
    EXPECT_EQ(loaded.address, w.address);
    EXPECT_EQ(loaded.private_key, w.private_key);
    struct stat st {};
    ASSERT_EQ(::stat((dir / "w").c_str(), &st), 0);
    EXPECT_EQ(st.st_mode & 0777, 0600u);
}

TEST(Wallet, RejectsCorruptFile) {
    test::TempDir dir;
    auto w = wallet(1);
    save_wallet(w, dir / "w");
    {
        std::fstream f(dir / "w", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(40);
        f.put('\x01');
    }
    EXPECT_ANY_THROW(load_wallet(dir / "w"));
    EXPECT_ANY_THROW(load_wallet(dir / "missing"));
}

TEST(Wallet, NonceSignatureCoversRawNonce) {
    auto w = wallet(1);
    NonceValue n;
    n.bytes.fill(7);
    auto sig = sign_nonce(w, n);
    EXPECT_TRUE(verify_nonce_signature(w.public_key, n, sig));
    EXPECT_TRUE(crypto::ed25519_verify(w.public_key, n.view(), sig));
    n.bytes[0] = 8;
    EXPECT_FALSE(verify_nonce_signature(w.public_key, n, sig));
}

TEST_F(AuthFixture, LoginIssuesTokenForSubject) {
    auto w = wallet(1);
    auto nonce = auth.issue_nonce(w.address);
    EXPECT_EQ(nonce.issued_to, w.address);
    auto token = auth.verify_login(w.address, nonce.value, w.public_key, sign_nonce(w, nonce.value));
    EXPECT_EQ(token.subject, w.address);
    EXPECT_EQ(tokens.authenticate(token.encode()), w.address);
    EXPECT_EQ(token.expires_at - token.issued_at, 3600 * 1000);
    EXPECT_EQ(auth.outstanding(), 0u);
}

TEST_F(AuthFixture, NonceIsSingleUse) {
    auto w = wallet(1);
    auto nonce = auth.issue_nonce(w.address);
    auto sig = sign_nonce(w, nonce.value);
    auth.verify_login(w.address, nonce.value, w.public_key, sig);
    EXPECT_EQ(auth_code([&] { auth.verify_login(w.address, nonce.value, w.public_key, sig); }),
              AuthError::Code::NonceConsumed);
}

TEST_F(AuthFixture, RejectionsChangeNothing) {
    auto w = wallet(1), other = wallet(2);
    auto nonce = auth.issue_nonce(w.address);

    NonceValue unknown;
    unknown.bytes.fill(9);
    EXPECT_EQ(auth_code([&] { auth.verify_login(w.address, unknown, w.public_key, sign_nonce(w, unknown)); }),
              AuthError::Code::UnknownNonce);
    // Nonce bound to a different address.
    EXPECT_EQ(auth_code([&] {
                  auth.verify_login(other.address, nonce.value, other.public_key, sign_nonce(other, nonce.value));
              }),
              AuthError::Code::UnknownNonce);
    // Someone else's signature over the right nonce.
    EXPECT_EQ(auth_code([&] { auth.verify_login(w.address, nonce.value, other.public_key, sign_nonce(other, nonce.value)); }),
              AuthError::Code::BadSignature);
    // Right key, signature over something else.
    EXPECT_EQ(auth_code([&] { auth.verify_login(w.address, nonce.value, w.public_key, sign_nonce(w, unknown)); }),
              AuthError::Code::BadSignature);

    EXPECT_EQ(auth.outstanding(), 1u);
    EXPECT_NO_THROW(auth.verify_login(w.address, nonce.value, w.public_key, sign_nonce(w, nonce.value)));
}

TEST_F(AuthFixture, NonceExpires) {
    auto w = wallet(1);
    auto nonce = auth.issue_nonce(w.address);
    clock.advance(300 * 1000 + 1);
    EXPECT_EQ(auth_code([&] { auth.verify_login(w.address, nonce.value, w.public_key, sign_nonce(w, nonce.value)); }),
              AuthError::Code::UnknownNonce);
}

TEST_F(AuthFixture, TokensExpireAndResistForgery) {
    auto w = wallet(1);
    auto token = tokens.issue(w.address);

    auto forged = token;
    forged.subject = wallet(2).address;
    EXPECT_EQ(auth_code([&] { tokens.authenticate(forged.encode()); }), AuthError::Code::TokenForged);

    auto stretched = token;
    stretched.expires_at += 1000000;
    EXPECT_EQ(auth_code([&] { tokens.authenticate(stretched); }), AuthError::Code::TokenForged);

    FixedClock other_clock;
    crypto::SecretSeed other_seed{};
    other_seed.fill(1);
    TokenAuthority other(other_seed, std::chrono::seconds(3600), other_clock);
    EXPECT_EQ(auth_code([&] { tokens.authenticate(other.issue(w.address).encode()); }), AuthError::Code::TokenForged);

    EXPECT_EQ(auth_code([&] { tokens.authenticate("not-hex"); }), AuthError::Code::TokenMalformed);
    EXPECT_EQ(auth_code([&] { tokens.authenticate(""); }), AuthError::Code::TokenMalformed);
    EXPECT_EQ(auth_code([&] { tokens.authenticate(token.encode().substr(2)); }), AuthError::Code::TokenMalformed);

    clock.advance(3600 * 1000);
    EXPECT_EQ(auth_code([&] { tokens.authenticate(token.encode()); }), AuthError::Code::TokenExpired);
}

TEST_F(AuthFixture, TokenEncodingRoundTrips) {
    auto token = tokens.issue(wallet(3).address);
    auto decoded = SessionToken::decode(token.encode());
    EXPECT_EQ(decoded.subject, token.subject);
    EXPECT_EQ(decoded.issued_at, token.issued_at);
    EXPECT_EQ(decoded.expires_at, token.expires_at);
    EXPECT_EQ(decoded.token_signature, token.token_signature);
}

TEST_F(AuthFixture, ConcurrentLoginsConsumeOnce) {
    auto w = wallet(1);
    for (int round = 0; round < 20; ++round) {
        auto nonce = auth.issue_nonce(w.address);
        auto sig = sign_nonce(w, nonce.value);
        std::atomic<int> ok{0}, consumed{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&] {
                try {
                    auth.verify_login(w.address, nonce.value, w.public_key, sig);
                    ++ok;
                } catch (const AuthError& e) {
                    if (e.code() == AuthError::Code::NonceConsumed) ++consumed;
                }
            });
        for (auto& t : threads) t.join();
        ASSERT_EQ(ok.load(), 1);
        ASSERT_EQ(consumed.load(), 7);
    }
}
