#include "evsite/money.hpp"

#include <cstdlib>

namespace evsite {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw MoneyOverflow("integer overflow in money addition");
  return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw MoneyOverflow("integer overflow in money multiplication");
  return out;
}

Money Money::from_rupiah(std::int64_t rupiah) { return from_centi(checked_mul(rupiah, 100)); }

Money Money::operator+(Money other) const { return from_centi(checked_add(centi_, other.centi_)); }

Money Money::operator-(Money other) const {
  std::int64_t out = 0;
  if (__builtin_sub_overflow(centi_, other.centi_, &out)) {
    throw MoneyOverflow("integer overflow in money subtraction");
  }
  return from_centi(out);
}

Money Money::times(std::int64_t count) const { return from_centi(checked_mul(centi_, count)); }

std::int64_t div_round_half_up(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw std::invalid_argument("denominator must be positive");
  // floor((2n + d) / 2d) without overflowing on 2n.
  std::int64_t q = numerator / denominator;
  std::int64_t r = numerator % denominator;
  if (r < 0) {
    r += denominator;
    --q;
  }
  if (r >= denominator - r) ++q;
  return q;
}

Money parse_rupiah(std::string_view text) {
  auto fail = [&] { throw std::invalid_argument("malformed Rupiah amount: '" + std::string(text) + "'"); };
  if (text.empty()) fail();
  bool negative = false;
  std::size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t whole = 0;
  int int_digits = 0;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
    whole = checked_add(checked_mul(whole, 10), text[pos] - '0');
    ++pos;
    ++int_digits;
  }
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (frac_digits == 2) fail();
      frac = frac * 10 + (text[pos] - '0');
      ++pos;
      ++frac_digits;
    }
    if (frac_digits == 0) fail();
  }
  if (pos != text.size() || int_digits == 0) fail();
  if (frac_digits == 1) frac *= 10;
  std::int64_t centi = checked_add(checked_mul(whole, 100), frac);
  return Money::from_centi(negative ? -centi : centi);
}

std::string format_rupiah_decimal(Money amount) {
  std::int64_t c = amount.centi();
  bool negative = c < 0;
  // Work in unsigned to cover INT64_MIN.
  std::uint64_t mag = negative ? 0 - static_cast<std::uint64_t>(c) : static_cast<std::uint64_t>(c);
  std::string frac = std::to_string(mag % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (negative ? "-" : "") + std::to_string(mag / 100) + "." + frac;
}

std::string format_rupiah_grouped(Money amount) {
  std::int64_t rupiah = div_round_half_up(amount.centi(), 100);
  bool negative = rupiah < 0;
  std::string digits = std::to_string(negative ? -rupiah : rupiah);
  std::string grouped;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count > 0 && count % 3 == 0) grouped.insert(grouped.begin(), ',');
    grouped.insert(grouped.begin(), *it);
    ++count;
  }
  return std::string(negative ? "-Rp " : "Rp ") + grouped;
}

}  // namespace evsite
