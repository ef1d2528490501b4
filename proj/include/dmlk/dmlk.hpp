#pragma once

// Umbrella header for the whole library: seeded sampling, synthetic designs,
// nuisance learners, cross-fitted DML with conditioning diagnostics, and the
// Monte Carlo harness.

#include "dmlk/config.hpp"
#include "dmlk/csv.hpp"
#include "dmlk/dgp.hpp"
#include "dmlk/dml.hpp"
#include "dmlk/errors.hpp"
#include "dmlk/folds.hpp"
#include "dmlk/forest.hpp"
#include "dmlk/lasso.hpp"
#include "dmlk/learners.hpp"
#include "dmlk/mat.hpp"
#include "dmlk/montecarlo.hpp"
#include "dmlk/normal.hpp"
#include "dmlk/ols.hpp"
#include "dmlk/report.hpp"
#include "dmlk/rng.hpp"
#include "dmlk/stochastics.hpp"
