#pragma once

#include "ttfm/covariance.hpp"
#include "ttfm/errors.hpp"
#include "ttfm/estimator.hpp"
#include "ttfm/forecast.hpp"
#include "ttfm/io.hpp"
#include "ttfm/linalg.hpp"
#include "ttfm/metrics.hpp"
#include "ttfm/order_select.hpp"
#include "ttfm/parallel.hpp"
#include "ttfm/rng.hpp"
#include "ttfm/series.hpp"
#include "ttfm/simulate.hpp"
#include "ttfm/version.hpp"
#include "ttfm/whitenoise.hpp"
