// Umbrella header.
#pragma once

#include "silt/chart.hpp"
#include "silt/checkpoint.hpp"
#include "silt/common.hpp"
#include "silt/constraints.hpp"
#include "silt/corpus.hpp"
#include "silt/decode.hpp"
#include "silt/eval.hpp"
#include "silt/graph.hpp"
#include "silt/manifest.hpp"
#include "silt/objective.hpp"
#include "silt/optimizer.hpp"
#include "silt/rng.hpp"
#include "silt/synth.hpp"
#include "silt/tensor.hpp"
#include "silt/train.hpp"
