#pragma once

#include "ifa/cjmle.hpp"
#include "ifa/em.hpp"
#include "ifa/identify.hpp"
#include "ifa/irf.hpp"
#include "ifa/item_fit.hpp"
#include "ifa/likelihood.hpp"
#include "ifa/normal.hpp"
#include "ifa/quadrature.hpp"
#include "ifa/sampler.hpp"
#include "ifa/simulate.hpp"
#include "ifa/spectral.hpp"
#include "ifa/types.hpp"
