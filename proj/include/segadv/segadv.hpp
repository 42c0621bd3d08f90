#pragma once

// Umbrella header for the segadv library.

#include "segadv/analysis.hpp"
#include "segadv/bias_lab.hpp"
#include "segadv/common.hpp"
#include "segadv/config.hpp"
#include "segadv/env.hpp"
#include "segadv/estimators.hpp"
#include "segadv/io.hpp"
#include "segadv/rng.hpp"
#include "segadv/sae.hpp"
#include "segadv/segmentation.hpp"
#include "segadv/trainer.hpp"
#include "segadv/trajectory.hpp"
#include "segadv/value_head.hpp"
