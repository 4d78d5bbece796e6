#include "rigidity/symbolic.hpp"

#include "rigidity/errors.hpp"

namespace rigidity {

namespace {

void check_base(int p)
{
    if (p < 2 || p > Word::max_base)
        throw InputError("base p must lie in [2, " + std::to_string(Word::max_base) + "], got " +
                         std::to_string(p));
}

void check_depth(int depth)
{
    if (depth < 1 || depth > Word::max_depth)
        throw InputError("word depth must lie in [1, " + std::to_string(Word::max_depth) + "], got " +
                         std::to_string(depth));
}

char digit_char(int d) { return static_cast<char>(d < 10 ? '0' + d : 'a' + (d - 10)); }

int char_digit(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'z') return c - 'a' + 10;
    if (c >= 'A' && c <= 'Z') return c - 'A' + 10;
    return -1;
}

} // namespace

Word::Word(int p, std::vector<std::uint8_t> digits) : p_(p), digits_(std::move(digits))
{
    check_base(p_);
    check_depth(depth());
    for (auto d : digits_)
        if (d >= p_) throw InputError("digit " + std::to_string(d) + " is not below base " + std::to_string(p_));
}

Word Word::from_index(int p, int depth, std::uint64_t index)
{
    check_base(p);
    check_depth(depth);
    std::vector<std::uint8_t> digits(static_cast<std::size_t>(depth));
    std::uint64_t k = index;
    for (int j = depth - 1; j >= 0; --j) {
        digits[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(k % static_cast<std::uint64_t>(p));
        k /= static_cast<std::uint64_t>(p);
    }
    if (k != 0) throw InputError("index out of range for depth " + std::to_string(depth));
    return Word(p, std::move(digits));
}

Word Word::zeros(int p, int depth) { return Word(p, std::vector<std::uint8_t>(static_cast<std::size_t>(depth), 0)); }

Word Word::parse(int p, std::string_view text)
{
    check_base(p);
    std::vector<std::uint8_t> digits;
    digits.reserve(text.size());
    for (char c : text) {
        int d = char_digit(c);
        if (d < 0 || d >= p)
            throw InputError("invalid digit '" + std::string(1, c) + "' for base " + std::to_string(p));
        digits.push_back(static_cast<std::uint8_t>(d));
    }
    return Word(p, std::move(digits));
}

std::uint64_t Word::index() const
{
    (void)checked_pow(static_cast<std::uint64_t>(p_), depth());
    std::uint64_t k = 0;
    for (auto d : digits_) k = k * static_cast<std::uint64_t>(p_) + d;
    return k;
}

Integer Word::big_index() const
{
    Integer k = 0;
    for (auto d : digits_) k = k * p_ + d;
    return k;
}

std::string Word::str() const
{
    std::string s;
    s.reserve(digits_.size());
    for (auto d : digits_) s.push_back(digit_char(d));
    return s;
}

Word Word::shift(int times) const
{
    if (times < 0) throw InputError("negative shift");
    if (times >= depth()) throw InputError("cannot shift to empty word");
    return Word(p_, std::vector<std::uint8_t>(digits_.begin() + times, digits_.end()));
}

Word Word::prepend(int digit) const
{
    if (digit < 0 || digit >= p_) throw InputError("digit " + std::to_string(digit) + " out of range");
    std::vector<std::uint8_t> d;
    d.reserve(digits_.size() + 1);
    d.push_back(static_cast<std::uint8_t>(digit));
    d.insert(d.end(), digits_.begin(), digits_.end());
    return Word(p_, std::move(d));
}

Word Word::append(int digit) const
{
    if (digit < 0 || digit >= p_) throw InputError("digit " + std::to_string(digit) + " out of range");
    std::vector<std::uint8_t> d = digits_;
    d.push_back(static_cast<std::uint8_t>(digit));
    return Word(p_, std::move(d));
}

Word Word::prefix(int length) const
{
    if (length < 1 || length > depth()) throw InputError("prefix length out of range");
    return Word(p_, std::vector<std::uint8_t>(digits_.begin(), digits_.begin() + length));
}

std::vector<Word> Word::children() const
{
    std::vector<Word> out;
    out.reserve(static_cast<std::size_t>(p_));
    for (int i = 0; i < p_; ++i) out.push_back(append(i));
    return out;
}

std::vector<Word> Word::preimages() const
{
    std::vector<Word> out;
    out.reserve(static_cast<std::size_t>(p_));
    for (int i = 0; i < p_; ++i) out.push_back(prepend(i));
    return out;
}

CylinderInterval interval_of(const Word& w)
{
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), static_cast<unsigned long>(w.base()), static_cast<unsigned long>(w.depth()));
    Integer k = w.big_index();
    Rational left(k, scale), right(Integer(k + 1), scale);
    left.canonicalize();
    right.canonicalize();
    return {w, left, right};
}

Word code_point(const Rational& x, int p, int depth)
{
    check_base(p);
    check_depth(depth);
    if (x < 0 || x >= 1) throw InputError("point must lie in [0, 1), got " + to_string(x));
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), static_cast<unsigned long>(p), static_cast<unsigned long>(depth));
    Integer scaled = x.get_num() * scale;
    Integer k;
    mpz_fdiv_q(k.get_mpz_t(), scaled.get_mpz_t(), x.get_den().get_mpz_t());

    std::vector<std::uint8_t> digits(static_cast<std::size_t>(depth));
    for (int j = depth - 1; j >= 0; --j) {
        digits[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(mpz_fdiv_ui(k.get_mpz_t(), static_cast<unsigned long>(p)));
        mpz_fdiv_q_ui(k.get_mpz_t(), k.get_mpz_t(), static_cast<unsigned long>(p));
    }
    return Word(p, std::move(digits));
}

std::pair<Rational, Rational> times_p_image(const Rational& left, const Rational& right, int p)
{
    Rational a = left * p, b = right * p;
    Integer whole;
    mpz_fdiv_q(whole.get_mpz_t(), a.get_num().get_mpz_t(), a.get_den().get_mpz_t());
    Rational shift(whole);
    return {Rational(a - shift), Rational(b - shift)};
}

} // namespace rigidity
