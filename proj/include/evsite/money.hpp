#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evsite {

class MoneyOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Exact amount in hundredths of a Rupiah. All arithmetic is checked and
// throws MoneyOverflow instead of wrapping.
class Money {
 public:
  constexpr Money() = default;

  static constexpr Money from_centi(std::int64_t centi) {
    Money m;
    m.centi_ = centi;
    return m;
  }
  static Money from_rupiah(std::int64_t rupiah);

  constexpr std::int64_t centi() const { return centi_; }

  friend constexpr auto operator<=>(Money, Money) = default;

  Money operator+(Money other) const;
  Money operator-(Money other) const;
  Money& operator+=(Money other) { return *this = *this + other; }
  Money& operator-=(Money other) { return *this = *this - other; }
  Money operator-() const { return Money{} - *this; }

  // Multiplies by an integer count.
  Money times(std::int64_t count) const;

 private:
  std::int64_t centi_ = 0;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

// Parses a decimal Rupiah amount with at most two fractional digits,
// e.g. "2644.78" or "-12". Throws std::invalid_argument on malformed input.
Money parse_rupiah(std::string_view text);

// Canonical machine form: optional '-', integer part, '.', two digits.
std::string format_rupiah_decimal(Money amount);

// Human form for tables: "Rp 19,013,308" (whole Rupiah, half-up).
std::string format_rupiah_grouped(Money amount);

// Rounds numerator/denominator to the nearest integer, ties toward +inf.
std::int64_t div_round_half_up(std::int64_t numerator, std::int64_t denominator);

}  // namespace evsite
