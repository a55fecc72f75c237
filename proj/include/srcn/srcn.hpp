#pragma once

#include "srcn/autodiff.hpp"
#include "srcn/data.hpp"
#include "srcn/errors.hpp"
#include "srcn/experiment.hpp"
#include "srcn/grid_codec.hpp"
#include "srcn/layers.hpp"
#include "srcn/lstm.hpp"
#include "srcn/metrics.hpp"
#include "srcn/model.hpp"
#include "srcn/ops.hpp"
#include "srcn/rng.hpp"
#include "srcn/synth.hpp"
#include "srcn/tensor.hpp"
