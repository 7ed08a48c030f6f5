// Copyright 2026 The gckit Authors.
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

#include "gckit/engine.hpp"
#include "gckit/error.hpp"
#include "gckit/hierarchy.hpp"
#include "gckit/io.hpp"
#include "gckit/matrix.hpp"
#include "gckit/metrics.hpp"
#include "gckit/parallel.hpp"
#include "gckit/preprocess.hpp"
#include "gckit/report.hpp"
#include "gckit/synth.hpp"
