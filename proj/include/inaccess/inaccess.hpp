#pragma once

#include "inaccess/accessibility.hpp"
#include "inaccess/catalog.hpp"
#include "inaccess/coefficients.hpp"
#include "inaccess/constants.hpp"
#include "inaccess/errors.hpp"
#include "inaccess/estimates.hpp"
#include "inaccess/parallel.hpp"
#include "inaccess/rng.hpp"
#include "inaccess/sde_engine.hpp"
#include "inaccess/stopping_times.hpp"
#include "inaccess/verification.hpp"
