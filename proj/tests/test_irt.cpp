#include <doctest.h>

TEST_CASE("placeholder test_irt") { CHECK(true); }
