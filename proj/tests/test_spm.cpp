#include "doctest.h"
TEST_SUITE("spm") {}
