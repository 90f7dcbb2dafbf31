// Copyright 2026 The ldpfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ldpfreq/baselines.hpp"
#include "ldpfreq/error.hpp"
#include "ldpfreq/ffield.hpp"
#include "ldpfreq/harness.hpp"
#include "ldpfreq/hpg.hpp"
#include "ldpfreq/pg.hpp"
#include "ldpfreq/pirappor.hpp"
#include "ldpfreq/projgeom.hpp"
#include "ldpfreq/pubcoin.hpp"
#include "ldpfreq/random.hpp"
#include "ldpfreq/wire.hpp"
