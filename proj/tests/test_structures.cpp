#include <doctest.h>

TEST_CASE("placeholder test_structures") { CHECK(true); }
