#pragma once

#include "tamed/brownian.hpp"
#include "tamed/core.hpp"
#include "tamed/gallery.hpp"
#include "tamed/harness.hpp"
#include "tamed/integrators.hpp"
#include "tamed/models.hpp"
#include "tamed/report_io.hpp"
#include "tamed/rng.hpp"
#include "tamed/taming.hpp"
