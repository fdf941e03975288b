#pragma once

// Saturating splines and saturating-spline additive models fit by
// fully-corrective conditional gradient over signed measures.

#include "satspline/baseline.hpp"
#include "satspline/dataset.hpp"
#include "satspline/error.hpp"
#include "satspline/fully_corrective.hpp"
#include "satspline/io.hpp"
#include "satspline/loss.hpp"
#include "satspline/measure.hpp"
#include "satspline/model.hpp"
#include "satspline/oracle.hpp"
#include "satspline/path.hpp"
#include "satspline/solver.hpp"
