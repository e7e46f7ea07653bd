#pragma once

#include "sphericity/classical.hpp"
#include "sphericity/clt_params.hpp"
#include "sphericity/corrected.hpp"
#include "sphericity/errors.hpp"
#include "sphericity/montecarlo.hpp"
#include "sphericity/mp_centering.hpp"
#include "sphericity/numerics.hpp"
#include "sphericity/power.hpp"
#include "sphericity/spectra.hpp"
