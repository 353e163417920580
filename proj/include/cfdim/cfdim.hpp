#pragma once

// Umbrella header for the whole library.

#include "cfdim/bigmath.hpp"
#include "cfdim/errors.hpp"
#include "cfdim/version.hpp"
#include "cfdim/word.hpp"
#include "cfdim/continued_fraction.hpp"
#include "cfdim/growth.hpp"
#include "cfdim/expression.hpp"
#include "cfdim/function_spec.hpp"
#include "cfdim/potential.hpp"
#include "cfdim/alphabet.hpp"
#include "cfdim/pressure.hpp"
#include "cfdim/transfer_operator.hpp"
#include "cfdim/dimension.hpp"
#include "cfdim/cantor.hpp"
#include "cfdim/box_counting.hpp"
