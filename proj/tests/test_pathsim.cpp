#include "doctest.h"

TEST_CASE("placeholder test_pathsim") { CHECK(true); }
