#pragma once

#include "mblend/binomial.hpp"
#include "mblend/blend.hpp"
#include "mblend/core.hpp"
#include "mblend/error.hpp"
#include "mblend/mmr.hpp"
#include "mblend/ope.hpp"
#include "mblend/propensity.hpp"
#include "mblend/rng.hpp"
#include "mblend/sim.hpp"
