#include <catch2/catch_amalgamated.hpp>
#include "probcast/probcast.hpp"
TEST_CASE("placeholder test_risk_backtest") { REQUIRE(true); }
