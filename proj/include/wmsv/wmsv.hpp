#pragma once

#include "wmsv/condsim.hpp"
#include "wmsv/euler.hpp"
#include "wmsv/heston.hpp"
#include "wmsv/matalg.hpp"
#include "wmsv/model.hpp"
#include "wmsv/pricing.hpp"
#include "wmsv/riccati.hpp"
#include "wmsv/rng.hpp"
#include "wmsv/specfun.hpp"
#include "wmsv/wishart.hpp"
