#include <catch2/catch_amalgamated.hpp>
#include "probcast/probcast.hpp"
TEST_CASE("placeholder test_garch") { REQUIRE(true); }
