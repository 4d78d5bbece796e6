#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/symbolic.hpp"

using namespace rigidity;

namespace {

std::vector<int> digits_of(const Word& w)
{
    std::vector<int> d;
    for (int j = 0; j < w.depth(); ++j) d.push_back(w[j]);
    return d;
}

} // namespace

TEST_CASE("interval_of matches composed inverse branches")
{
    const Word w = Word::parse(2, "101");
    const auto I = interval_of(w);
    CHECK(I.left == Rational(5, 8));
    CHECK(I.right == Rational(3, 4));
    CHECK(I.left == oracle::compose_inverse_branches(2, digits_of(w), 0));
    CHECK(I.right == oracle::compose_inverse_branches(2, digits_of(w), 1));

    const auto Z = interval_of(Word::zeros(3, 5));
    CHECK(Z.left == 0);
    CHECK(Z.right == Rational(1, 243));

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng() % 5);
        const int n = 1 + static_cast<int>(rng() % 6);
        const Word v = Word::from_index(p, n, rng() % checked_pow(static_cast<std::uint64_t>(p), n));
        const auto J = interval_of(v);
        CHECK(J.left == oracle::compose_inverse_branches(p, digits_of(v), 0));
        CHECK(J.right == oracle::compose_inverse_branches(p, digits_of(v), 1));
        CHECK(J.length() == Rational(1, static_cast<unsigned long>(checked_pow(static_cast<std::uint64_t>(p), n))));
    }
}

TEST_CASE("f_p maps a cylinder onto the cylinder of its shift")
{
    const Word w = Word::parse(2, "101");
    const auto I = interval_of(w);
    const auto image = times_p_image(I.left, I.right, 2);
    CHECK(image.first == Rational(1, 4));
    CHECK(image.second == Rational(1, 2));
    CHECK(interval_of(w.shift()).left == image.first);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const int p = 2 + static_cast<int>(rng() % 4);
        const int n = 2 + static_cast<int>(rng() % 5);
        const Word v = Word::from_index(p, n, rng() % checked_pow(static_cast<std::uint64_t>(p), n));
        const auto J = interval_of(v);
        // Oracle: multiply by p and drop the integer part of the left end.
        Rational a = J.left * p, b = J.right * p;
        const Integer whole = a.get_num() / a.get_den();
        a -= Rational(whole);
        b -= Rational(whole);
        const auto S = interval_of(v.shift());
        CHECK(S.left == a);
        CHECK(S.right == b);
    }
}

TEST_CASE("shift, prepend, children and preimages")
{
    CHECK(Word::parse(2, "101").shift().str() == "01");
    CHECK(Word::parse(2, "00").shift().str() == "0");
    CHECK_THROWS_WITH_AS(Word::parse(2, "1").shift(), "cannot shift to empty word", InputError);
    CHECK_THROWS_AS(Word::parse(2, "1").prepend(2), InputError);
    CHECK_THROWS_AS(Word::parse(2, "12"), InputError);

    const auto kids = Word::parse(2, "1").children();
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].str() == "10");
    CHECK(kids[1].str() == "11");

    const auto pre = Word::parse(2, "0").preimages();
    REQUIRE(pre.size() == 2);
    CHECK(pre[0].str() == "00");
    CHECK(pre[1].str() == "10");
    CHECK(interval_of(pre[0]).left == 0);
    CHECK(interval_of(pre[0]).right == Rational(1, 4));
    CHECK(interval_of(pre[1]).left == Rational(1, 2));
    CHECK(interval_of(pre[1]).right == Rational(3, 4));

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = 2 + static_cast<int>(rng() % 6);
        const int n = 1 + static_cast<int>(rng() % 5);
        const Word w = Word::from_index(p, n, rng() % checked_pow(static_cast<std::uint64_t>(p), n));
        for (int i = 0; i < p; ++i) CHECK(w.prepend(i).shift() == w);

        // Children tile the parent in order, lengths summing exactly.
        const auto parent = interval_of(w);
        Rational cursor = parent.left, total = 0;
        for (const auto& c : w.children()) {
            const auto I = interval_of(c);
            CHECK(I.left == cursor);
            cursor = I.right;
            total += I.length();
        }
        CHECK(cursor == parent.right);
        CHECK(total == parent.length());

        // Preimages: their images under f_p all equal I_w.
        for (const auto& v : w.preimages()) {
            const auto I = interval_of(v);
            const auto image = times_p_image(I.left, I.right, p);
            CHECK(image.first == parent.left);
            CHECK(image.second == parent.right);
        }
    }
}

TEST_CASE("index is a bijection onto 0..p^n-1")
{
    for (int p : {2, 3, 5}) {
        for (int n = 1; n <= 5; ++n) {
            const auto size = checked_pow(static_cast<std::uint64_t>(p), n);
            std::vector<char> seen(size, 0);
            for (std::uint64_t k = 0; k < size; ++k) {
                const Word w = Word::from_index(p, n, k);
                CHECK(w.index() == k);
                CHECK(Word::parse(p, w.str()) == w);
                seen[w.index()] = 1;
            }
            for (char s : seen) CHECK(s == 1);
        }
    }
    // Beyond 64 bits the big index still works.
    const Word deep = Word::zeros(7, 40).prepend(6);
    CHECK_THROWS_AS((void)deep.index(), InputError);
    Integer expected;
    mpz_ui_pow_ui(expected.get_mpz_t(), 7, 40);
    CHECK(deep.big_index() == expected * 6);
}

TEST_CASE("code_point")
{
    CHECK(code_point(Rational(5, 8), 2, 3).str() == "101");
    CHECK(code_point(Rational(0), 3, 4) == Word::zeros(3, 4));
    // Left endpoints belong to the cylinder they open.
    CHECK(code_point(Rational(1, 2), 2, 1).str() == "1");
    CHECK_THROWS_AS(code_point(Rational(1), 2, 3), InputError);
    CHECK_THROWS_AS(code_point(Rational(-1, 3), 2, 3), InputError);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const int p = 2 + static_cast<int>(rng() % 5);
        const int n = 1 + static_cast<int>(rng() % 8);
        const long den = 1 + static_cast<long>(rng() % 1000);
        const Rational x(static_cast<long>(rng() % static_cast<std::uint64_t>(den)), den);
        const auto I = interval_of(code_point(x, p, n));
        CHECK(I.contains(x));
    }
}
