#pragma once

#include "swag/common.hpp"
#include "swag/image.hpp"
#include "swag/losses.hpp"
#include "swag/manifest.hpp"
#include "swag/net.hpp"
#include "swag/ops.hpp"
#include "swag/optim.hpp"
#include "swag/stats.hpp"
#include "swag/tensor.hpp"
#include "swag/weights.hpp"
