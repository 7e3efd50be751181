// Copyright 2026 The dermafuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dermafuse/calibration.hpp"
#include "dermafuse/color_constancy.hpp"
#include "dermafuse/config.hpp"
#include "dermafuse/csv.hpp"
#include "dermafuse/dataset.hpp"
#include "dermafuse/errors.hpp"
#include "dermafuse/fusion.hpp"
#include "dermafuse/image.hpp"
#include "dermafuse/metrics.hpp"
#include "dermafuse/providers.hpp"
#include "dermafuse/transform.hpp"
#include "dermafuse/util.hpp"
