#pragma once

#include "canids/error.hpp"
#include "canids/rng.hpp"
#include "canids/core.hpp"
#include "canids/candump.hpp"
#include "canids/csv.hpp"
#include "canids/metadata.hpp"
#include "canids/synth.hpp"
#include "canids/features.hpp"
#include "canids/windows.hpp"
#include "canids/tree.hpp"
#include "canids/detectors.hpp"
#include "canids/model_io.hpp"
#include "canids/metrics.hpp"
#include "canids/lccde.hpp"
#include "canids/pipeline.hpp"
