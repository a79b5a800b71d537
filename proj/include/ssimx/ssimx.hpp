// Copyright Contributors to the ssimx Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "ssimx/error.hpp"
#include "ssimx/fit.hpp"
#include "ssimx/geometry.hpp"
#include "ssimx/grad.hpp"
#include "ssimx/image.hpp"
#include "ssimx/io.hpp"
#include "ssimx/resample.hpp"
#include "ssimx/ssim.hpp"
