#pragma once

#include "lester/error.hpp"
#include "lester/image.hpp"
#include "lester/maskio.hpp"
#include "lester/tracker.hpp"
#include "lester/contours.hpp"
#include "lester/render.hpp"
#include "lester/effects.hpp"
#include "lester/metrics.hpp"
#include "lester/pipeline.hpp"
