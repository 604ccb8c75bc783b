#pragma once

// Umbrella header.

#include "nncs/bounds.hpp"
#include "nncs/bpdn.hpp"
#include "nncs/core.hpp"
#include "nncs/experiments.hpp"
#include "nncs/io.hpp"
#include "nncs/lp.hpp"
#include "nncs/nnls.hpp"
#include "nncs/nsp.hpp"
#include "nncs/parallel.hpp"
#include "nncs/random_matrices.hpp"
#include "nncs/rng.hpp"
#include "nncs/svg.hpp"
