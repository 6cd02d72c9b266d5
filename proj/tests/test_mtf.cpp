#include "doctest.h"
TEST_SUITE("mtf") {}
