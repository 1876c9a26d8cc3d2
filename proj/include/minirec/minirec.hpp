//
// Copyright 2026 The Minirec Authors
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
//
#pragma once

#include "minirec/analysis.hpp"
#include "minirec/config.hpp"
#include "minirec/csv.hpp"
#include "minirec/curve.hpp"
#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"
#include "minirec/metrics.hpp"
#include "minirec/minimisation.hpp"
#include "minirec/model.hpp"
#include "minirec/models.hpp"
#include "minirec/prng.hpp"
#include "minirec/runner.hpp"
#include "minirec/synthetic.hpp"
#include "minirec/unlearning.hpp"
#include "minirec/version.hpp"
