#pragma once

#include "dirlab/conditional_lp.hpp"
#include "dirlab/forward_measure.hpp"
#include "dirlab/harness.hpp"
#include "dirlab/long_rates.hpp"
#include "dirlab/model.hpp"
#include "dirlab/philox.hpp"
#include "dirlab/pricing.hpp"
