#pragma once

#include "lscv/types.hpp"
#include "lscv/kernel.hpp"
#include "lscv/rng.hpp"
#include "lscv/curve.hpp"
#include "lscv/model.hpp"
#include "lscv/processes.hpp"
#include "lscv/likelihood.hpp"
#include "lscv/parallel.hpp"
#include "lscv/estimator.hpp"
#include "lscv/info.hpp"
#include "lscv/selection.hpp"
#include "lscv/stats.hpp"
#include "lscv/experiments.hpp"
#include "lscv/plot.hpp"
#include "lscv/io.hpp"
#include "lscv/config.hpp"
