#pragma once

// Umbrella header for the whole scanning library.

#include "bodyscan/body_models.hpp"
#include "bodyscan/config.hpp"
#include "bodyscan/cspace.hpp"
#include "bodyscan/errors.hpp"
#include "bodyscan/geometry.hpp"
#include "bodyscan/kneedle.hpp"
#include "bodyscan/metrics.hpp"
#include "bodyscan/parallel.hpp"
#include "bodyscan/planner.hpp"
#include "bodyscan/ply_io.hpp"
#include "bodyscan/rng.hpp"
#include "bodyscan/robot_model.hpp"
#include "bodyscan/sensor_sim.hpp"
#include "bodyscan/spatial_index.hpp"
#include "bodyscan/stitcher.hpp"
#include "bodyscan/workflow.hpp"
