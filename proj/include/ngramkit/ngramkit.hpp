// Copyright 2026 The ngramkit Authors.
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

#ifndef NGRAMKIT_NGRAMKIT_HPP_
#define NGRAMKIT_NGRAMKIT_HPP_

#include "ngramkit/arpa.hpp"
#include "ngramkit/corpus.hpp"
#include "ngramkit/counting.hpp"
#include "ngramkit/error.hpp"
#include "ngramkit/estimation.hpp"
#include "ngramkit/evaluation.hpp"
#include "ngramkit/keyword.hpp"
#include "ngramkit/merging.hpp"
#include "ngramkit/model.hpp"
#include "ngramkit/pruning.hpp"
#include "ngramkit/tokens.hpp"
#include "ngramkit/utf8.hpp"

#endif  // NGRAMKIT_NGRAMKIT_HPP_
