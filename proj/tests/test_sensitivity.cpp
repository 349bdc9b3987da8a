#include "doctest.h"

TEST_CASE("placeholder test_sensitivity") { CHECK(true); }
