#pragma once

#include "featureclock/errors.hpp"
#include "featureclock/numstats.hpp"
#include "featureclock/dataset.hpp"
#include "featureclock/grouping.hpp"
#include "featureclock/clockcore.hpp"
#include "featureclock/intergroup.hpp"
#include "featureclock/ingest.hpp"
#include "featureclock/render.hpp"
#include "featureclock/report.hpp"
