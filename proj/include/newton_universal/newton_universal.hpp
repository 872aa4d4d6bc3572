#pragma once

#include "newton_universal/linalg.hpp"
#include "newton_universal/sampling.hpp"
#include "newton_universal/modulus.hpp"
#include "newton_universal/problem.hpp"
#include "newton_universal/certify.hpp"
#include "newton_universal/solvers.hpp"
#include "newton_universal/bounds.hpp"
#include "newton_universal/io.hpp"
