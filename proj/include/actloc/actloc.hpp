#pragma once

#include "actloc/box.hpp"
#include "actloc/config.hpp"
#include "actloc/detect.hpp"
#include "actloc/errors.hpp"
#include "actloc/eval.hpp"
#include "actloc/harness.hpp"
#include "actloc/image.hpp"
#include "actloc/random.hpp"
#include "actloc/sim.hpp"
#include "actloc/sim_oracle.hpp"
#include "actloc/ssim.hpp"
#include "actloc/temporal.hpp"
#include "actloc/tubes.hpp"
#include "actloc/io/frames.hpp"
#include "actloc/io/heatmap_file.hpp"
#include "actloc/io/jsonl.hpp"
