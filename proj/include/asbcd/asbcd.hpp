#pragma once

#include "asbcd/io.hpp"
#include "asbcd/lipschitz.hpp"
#include "asbcd/partition.hpp"
#include "asbcd/problem.hpp"
#include "asbcd/reference.hpp"
#include "asbcd/rng.hpp"
#include "asbcd/solver.hpp"
#include "asbcd/theory.hpp"
