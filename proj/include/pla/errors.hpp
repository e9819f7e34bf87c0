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

#ifndef PLA_ERRORS_HPP
#define PLA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pla
{

// Base class of all library errors. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed or out-of-range configuration (exit code 2)
class ConfigError : public Error
{
public:
    using Error::Error;
};

// A model invariant does not hold, e.g. a degenerate facet (exit code 3)
class InvariantError : public Error
{
public:
    using Error::Error;
};

class GeometryError : public InvariantError
{
public:
    using InvariantError::InvariantError;
};

// A pipeline stage is missing an input artifact (exit code 4)
class DependencyError : public Error
{
public:
    using Error::Error;
};

} // namespace pla

#endif
