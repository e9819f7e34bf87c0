// SPDX-License-Identifier: Apache-2.0
//
// plasim - propagation modelling and analysis for physically large arrays
// Copyright (C) 2026 The plasim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PLA_PARALLEL_HPP
#define PLA_PARALLEL_HPP

#include <omp.h>

namespace pla
{

// Thread count for an OpenMP region; jobs <= 0 selects the runtime default
inline int resolve_jobs(int jobs)
{
    return jobs > 0 ? jobs : omp_get_max_threads();
}

} // namespace pla

#endif
