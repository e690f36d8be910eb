#include <doctest.h>

TEST_CASE("placeholder test_capi") { CHECK(true); }
