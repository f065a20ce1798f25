#pragma once

#include "supct/acquisition.hpp"
#include "supct/config.hpp"
#include "supct/denoise.hpp"
#include "supct/geometry.hpp"
#include "supct/harness.hpp"
#include "supct/image.hpp"
#include "supct/metrics.hpp"
#include "supct/penalty.hpp"
#include "supct/phantom.hpp"
#include "supct/presets.hpp"
#include "supct/raster_io.hpp"
#include "supct/recon.hpp"
#include "supct/run_record.hpp"
#include "supct/superiorize.hpp"
