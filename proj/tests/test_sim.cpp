#include <doctest.h>

TEST_CASE("placeholder test_sim") { CHECK(true); }
