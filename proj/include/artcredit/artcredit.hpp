#pragma once

#include "artcredit/analytics.hpp"
#include "artcredit/bound_optimizer.hpp"
#include "artcredit/config.hpp"
#include "artcredit/experiments.hpp"
#include "artcredit/io.hpp"
#include "artcredit/mechanism.hpp"
#include "artcredit/parallel.hpp"
#include "artcredit/rng.hpp"
#include "artcredit/sim_engine.hpp"
#include "artcredit/strategy.hpp"
#include "artcredit/value_model.hpp"
