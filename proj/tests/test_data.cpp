#include <doctest.h>

TEST_CASE("placeholder test_data") { CHECK(true); }
