#include "doctest.h"

TEST_CASE("placeholder test_model") { CHECK(true); }
