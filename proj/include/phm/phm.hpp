#pragma once

#include "phm/appearance.hpp"
#include "phm/batch.hpp"
#include "phm/cloud.hpp"
#include "phm/error.hpp"
#include "phm/eval.hpp"
#include "phm/metric.hpp"
#include "phm/patch_graph.hpp"
#include "phm/ply.hpp"
#include "phm/sampling.hpp"
#include "phm/spatial_index.hpp"
#include "phm/visible_diff.hpp"
