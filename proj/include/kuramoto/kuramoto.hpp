#pragma once

#include "kuramoto/core.hpp"
#include "kuramoto/diagnostics.hpp"
#include "kuramoto/distributions.hpp"
#include "kuramoto/flux.hpp"
#include "kuramoto/pmc.hpp"
#include "kuramoto/spectral.hpp"
#include "kuramoto/stationary.hpp"
#include "kuramoto/steppers.hpp"
