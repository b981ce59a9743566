#pragma once

// Shuffled linear regression: estimators for y = P X w + e with an unknown
// row permutation P, plus the synthetic/real-data experiment harness.

#include "shufreg/csv.hpp"
#include "shufreg/data_io.hpp"
#include "shufreg/errors.hpp"
#include "shufreg/estimators.hpp"
#include "shufreg/experiments.hpp"
#include "shufreg/linalg.hpp"
#include "shufreg/permutation.hpp"
#include "shufreg/rng.hpp"
#include "shufreg/synthetic.hpp"
#include "shufreg/types.hpp"
