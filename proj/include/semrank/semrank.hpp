// Copyright 2026 The semrank Authors.
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


// Umbrella header.

#pragma once

#include "semrank/arena.hpp"
#include "semrank/checkpoint.hpp"
#include "semrank/common.hpp"
#include "semrank/config.hpp"
#include "semrank/dataprep.hpp"
#include "semrank/embedder.hpp"
#include "semrank/judge.hpp"
#include "semrank/judge_http.hpp"
#include "semrank/mockserve.hpp"
#include "semrank/optim.hpp"
#include "semrank/pipeline.hpp"
#include "semrank/policy.hpp"
#include "semrank/remote_embedder.hpp"
#include "semrank/report.hpp"
#include "semrank/rewards.hpp"
#include "semrank/rouge.hpp"
#include "semrank/synthetic.hpp"
#include "semrank/tensor.hpp"
#include "semrank/text_protocol.hpp"
#include "semrank/trainer.hpp"
#include "semrank/vocab.hpp"
