#pragma once

#include "interactmove/core.hpp"
#include "interactmove/geometry.hpp"
#include "interactmove/scene_model.hpp"
#include "interactmove/body.hpp"
#include "interactmove/diffusion.hpp"
#include "interactmove/tiny_denoiser.hpp"
#include "interactmove/affordance.hpp"
#include "interactmove/interaction_gen.hpp"
#include "interactmove/alignment.hpp"
#include "interactmove/metrics.hpp"
#include "interactmove/parallel.hpp"
#include "interactmove/pipeline.hpp"
#include "interactmove/io.hpp"
#include "interactmove/config.hpp"
#include "interactmove/toy.hpp"
