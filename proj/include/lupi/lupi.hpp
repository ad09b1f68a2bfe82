#pragma once

// Umbrella header for the whole library.

#include "lupi/core.hpp"
#include "lupi/kernels.hpp"
#include "lupi/qp_solver.hpp"
#include "lupi/model.hpp"
#include "lupi/svm.hpp"
#include "lupi/adaptive.hpp"
#include "lupi/metrics.hpp"
#include "lupi/dataset.hpp"
#include "lupi/model_selection.hpp"
#include "lupi/data_io.hpp"
#include "lupi/synthetic.hpp"
#include "lupi/experiment.hpp"
#include "lupi/report.hpp"
