#include <limits>

#include "doctest.h"
#include "evsite/money.hpp"

using namespace evsite;

TEST_CASE("parse_rupiah reads up to two decimals exactly") {
  CHECK(parse_rupiah("2644.78").centi() == 264478);
  CHECK(parse_rupiah("403288").centi() == 40328800);
  CHECK(parse_rupiah("0.5").centi() == 50);
  CHECK(parse_rupiah("-12.05").centi() == -1205);
  CHECK_THROWS_AS(parse_rupiah("1.234"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rupiah("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rupiah("1."), std::invalid_argument);
  CHECK_THROWS_AS(parse_rupiah(""), std::invalid_argument);
}

TEST_CASE("formatting") {
  CHECK(format_rupiah_decimal(Money::from_centi(264478)) == "2644.78");
  CHECK(format_rupiah_decimal(Money::from_centi(-5)) == "-0.05");
  CHECK(format_rupiah_decimal(Money::from_centi(100)) == "1.00");
  CHECK(format_rupiah_grouped(Money::from_rupiah(19013308)) == "Rp 19,013,308");
  CHECK(format_rupiah_grouped(Money::from_centi(49)) == "Rp 0");
  CHECK(format_rupiah_grouped(Money::from_centi(50)) == "Rp 1");
  CHECK(format_rupiah_grouped(Money::from_rupiah(-1234)) == "-Rp 1,234");
}

TEST_CASE("half-up rounding") {
  CHECK(div_round_half_up(5, 10) == 1);
  CHECK(div_round_half_up(4, 10) == 0);
  CHECK(div_round_half_up(-5, 10) == 0);
  CHECK(div_round_half_up(-6, 10) == -1);
  CHECK(div_round_half_up(1500, 1000) == 2);
}

TEST_CASE("overflow is reported, never wrapped") {
  Money big = Money::from_centi(std::numeric_limits<std::int64_t>::max() - 1);
  CHECK_THROWS_AS(big + Money::from_centi(5), MoneyOverflow);
  CHECK_THROWS_AS(big.times(2), MoneyOverflow);
  CHECK_THROWS_AS(Money::from_centi(std::numeric_limits<std::int64_t>::min()) - Money::from_centi(1), MoneyOverflow);
}
