#pragma once

// Umbrella header for the CARE outlier-detection ensemble library.

#include "care/agreement.hpp"
#include "care/dataset.hpp"
#include "care/detectors.hpp"
#include "care/ensemble.hpp"
#include "care/error_estimation.hpp"
#include "care/errors.hpp"
#include "care/evaluation.hpp"
#include "care/matrix.hpp"
#include "care/neighbors.hpp"
#include "care/parallel.hpp"
#include "care/random.hpp"
#include "care/scaling.hpp"
#include "care/synthetic.hpp"
#include "care/version.hpp"
