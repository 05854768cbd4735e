#pragma once

#include "rooftop/detection.hpp"
#include "rooftop/error.hpp"
#include "rooftop/evaluation.hpp"
#include "rooftop/geometry.hpp"
#include "rooftop/heads.hpp"
#include "rooftop/image.hpp"
#include "rooftop/mask.hpp"
#include "rooftop/proposal.hpp"
#include "rooftop/render.hpp"
#include "rooftop/roialign.hpp"
#include "rooftop/tiling.hpp"
