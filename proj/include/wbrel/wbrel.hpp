#pragma once

#include "wbrel/curves.hpp"
#include "wbrel/dists.hpp"
#include "wbrel/errors.hpp"
#include "wbrel/mcem.hpp"
#include "wbrel/rng.hpp"
#include "wbrel/sampler.hpp"
#include "wbrel/simlab.hpp"
#include "wbrel/special.hpp"
#include "wbrel/sysmodel.hpp"
