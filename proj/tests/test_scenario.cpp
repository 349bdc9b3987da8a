#include "doctest.h"

TEST_CASE("placeholder test_scenario") { CHECK(true); }
