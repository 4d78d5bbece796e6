#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rigidity/scalar.hpp"

namespace rigidity {

// A base-p digit string i0 i1 ... i_{n-1} labelling the cylinder I_w of the
// n-th partition of the circle under x -> px mod 1.
//
// Digits are most-significant first: the word's index is
//     k(w) = sum_j i_j p^(n-1-j),
// and I_w = [k/p^n, (k+1)/p^n]. With this order the first digit selects the
// depth-1 cylinder containing I_w, and f_p maps I_w onto I_{shift(w)}.
class Word {
public:
    static constexpr int max_depth = 64;
    static constexpr int max_base = 36;

    Word(int p, std::vector<std::uint8_t> digits);

    static Word from_index(int p, int depth, std::uint64_t index);
    static Word zeros(int p, int depth);
    // Digits 0-9 then a-z.
    static Word parse(int p, std::string_view text);

    int base() const noexcept { return p_; }
    int depth() const noexcept { return static_cast<int>(digits_.size()); }
    int operator[](int j) const { return digits_[static_cast<std::size_t>(j)]; }
    std::span<const std::uint8_t> digits() const noexcept { return digits_; }

    // Throws InputError when p^depth does not fit in 64 bits.
    std::uint64_t index() const;
    Integer big_index() const;

    std::string str() const;

    // Drops the leading digit `times` times (sigma^times).
    Word shift(int times = 1) const;
    Word prepend(int digit) const;
    Word append(int digit) const;
    Word prefix(int length) const;

    // The p words w·i whose cylinders partition I_w.
    std::vector<Word> children() const;
    // The p words i·w whose cylinders make up f_p^{-1}(I_w).
    std::vector<Word> preimages() const;

    friend bool operator==(const Word&, const Word&) = default;
    friend auto operator<=>(const Word&, const Word&) = default;

private:
    int p_;
    std::vector<std::uint8_t> digits_;
};

struct CylinderInterval {
    Word word;
    Rational left;
    Rational right;

    Rational length() const { return right - left; }
    // Half-open membership [left, right), matching code_point's tie rule.
    bool contains(const Rational& x) const { return left <= x && x < right; }
};

CylinderInterval interval_of(const Word& w);

// The depth-n word whose cylinder has x as a point of [k/p^n, (k+1)/p^n).
// Endpoints belong to the cylinder they open.
Word code_point(const Rational& x, int p, int depth);

// Image of [left, right] under x -> px, reduced so that the left end lies in
// [0, 1). For a cylinder of depth >= 2 the right end stays <= 1.
std::pair<Rational, Rational> times_p_image(const Rational& left, const Rational& right, int p);

} // namespace rigidity
