#include <doctest.h>

TEST_CASE("placeholder test_mixed") { CHECK(true); }
