#pragma once

#include "walksum/core.hpp"
#include "walksum/stats.hpp"
#include "walksum/walk.hpp"
#include "walksum/process.hpp"
#include "walksum/dependence.hpp"
#include "walksum/variance.hpp"
#include "walksum/harness.hpp"
#include "walksum/estimation.hpp"
#include "walksum/config.hpp"
#include "walksum/experiment.hpp"
