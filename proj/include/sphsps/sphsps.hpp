#pragma once

#include "sphsps/bench.hpp"
#include "sphsps/connectivity.hpp"
#include "sphsps/errors.hpp"
#include "sphsps/features.hpp"
#include "sphsps/geometry.hpp"
#include "sphsps/image.hpp"
#include "sphsps/io.hpp"
#include "sphsps/metrics.hpp"
#include "sphsps/regularity.hpp"
#include "sphsps/segmentation.hpp"
