// Copyright (c) 2026 The prosody-vc Authors
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

#ifndef VC_COMMON_H_
#define VC_COMMON_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Base class of every error raised by the library.
class VcError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or record.
class ParseError : public VcError {
 public:
  using VcError::VcError;
};

// Input that parses but violates an invariant or precondition.
class ValidationError : public VcError {
 public:
  using VcError::VcError;
};

// Operand shapes do not agree.
class DimensionError : public VcError {
 public:
  using VcError::VcError;
};

// Writes a timestamp-free line to stderr; used for training and batch logs.
void LogInfo(const std::string& msg);
void LogWarning(const std::string& msg);

// Suppresses LogInfo output (warnings still print). Returns the old value.
bool SetQuietLogging(bool quiet);

// Calls fn(i) for every i in [0, n) on up to |workers| threads. Work items
// must be independent; the first exception by index is rethrown.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

// Writes through a sibling temporary file and renames it into place, so a
// reader never sees a partial file.
void WriteFileAtomic(const std::string& path, const std::string& contents);

// 64-bit FNV-1a over a byte string, rendered as 16 lowercase hex digits.
std::string Fnv1aHex(const std::string& bytes);

}  // namespace vc

#endif  // VC_COMMON_H_
