// Copyright 2026 The DWD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dwd/annotation_io.hpp"
#include "dwd/autodiff.hpp"
#include "dwd/config.hpp"
#include "dwd/dataset.hpp"
#include "dwd/decoder.hpp"
#include "dwd/encoder.hpp"
#include "dwd/error.hpp"
#include "dwd/eval.hpp"
#include "dwd/losses.hpp"
#include "dwd/map_io.hpp"
#include "dwd/network.hpp"
#include "dwd/optimizer.hpp"
#include "dwd/parallel.hpp"
#include "dwd/pipeline.hpp"
#include "dwd/png_io.hpp"
#include "dwd/render.hpp"
#include "dwd/scoregen.hpp"
#include "dwd/tensor.hpp"
#include "dwd/train.hpp"
#include "dwd/types.hpp"
#include "dwd/union_find.hpp"
