// Copyright 2026 The newsctx Authors.
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

#ifndef NEWSCTX_NEWSCTX_HPP_
#define NEWSCTX_NEWSCTX_HPP_

#include "newsctx/assembly.hpp"
#include "newsctx/corpus.hpp"
#include "newsctx/entity.hpp"
#include "newsctx/error.hpp"
#include "newsctx/jsonl.hpp"
#include "newsctx/metrics.hpp"
#include "newsctx/oracle_select.hpp"
#include "newsctx/relation.hpp"
#include "newsctx/sidecar.hpp"
#include "newsctx/strategy.hpp"
#include "newsctx/text.hpp"
#include "newsctx/xmodal.hpp"

#endif  // NEWSCTX_NEWSCTX_HPP_
