#include <doctest.h>

TEST_CASE("placeholder test_cfa") { CHECK(true); }
