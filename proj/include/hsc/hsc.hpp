#pragma once

#include "hsc/analytic.hpp"
#include "hsc/distributions.hpp"
#include "hsc/errors.hpp"
#include "hsc/event_source.hpp"
#include "hsc/rng.hpp"
#include "hsc/simulate.hpp"
#include "hsc/version.hpp"
