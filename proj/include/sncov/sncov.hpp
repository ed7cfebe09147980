#pragma once

#include "sncov/errors.hpp"
#include "sncov/stats.hpp"
#include "sncov/spectral_function.hpp"
#include "sncov/mp_law.hpp"
#include "sncov/spectra.hpp"
#include "sncov/clt.hpp"
#include "sncov/hypothesis.hpp"
#include "sncov/random.hpp"
#include "sncov/datagen.hpp"
#include "sncov/montecarlo.hpp"
#include "sncov/empirical.hpp"
#include "sncov/io.hpp"
