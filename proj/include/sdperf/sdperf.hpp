#pragma once

#include "sdperf/cost_model.hpp"
#include "sdperf/drafter.hpp"
#include "sdperf/error.hpp"
#include "sdperf/memory.hpp"
#include "sdperf/overlap.hpp"
#include "sdperf/plotdata.hpp"
#include "sdperf/sim.hpp"
#include "sdperf/trace.hpp"
