#pragma once

#include "qslab/classes.hpp"
#include "qslab/constants.hpp"
#include "qslab/errors.hpp"
#include "qslab/execution_tree.hpp"
#include "qslab/fft.hpp"
#include "qslab/lattice_pmf.hpp"
#include "qslab/limit_density.hpp"
#include "qslab/quicksort_dist.hpp"
#include "qslab/rng.hpp"
#include "qslab/smoothing.hpp"
#include "qslab/tilting.hpp"
