#pragma once

#include "sdqm/dataio.hpp"
#include "sdqm/embedmetrics.hpp"
#include "sdqm/error.hpp"
#include "sdqm/evolve.hpp"
#include "sdqm/fuse.hpp"
#include "sdqm/image.hpp"
#include "sdqm/kmeans.hpp"
#include "sdqm/regress.hpp"
#include "sdqm/rng.hpp"
#include "sdqm/statdist.hpp"
#include "sdqm/structmetrics.hpp"
#include "sdqm/vinfo.hpp"
