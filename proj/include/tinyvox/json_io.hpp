// Copyright 2026 The tinyvox Authors.
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

#include <json.hpp>

#include "tinyvox/error.hpp"
#include "tinyvox/loss.hpp"
#include "tinyvox/manifest.hpp"
#include "tinyvox/sampling.hpp"
#include "tinyvox/schedule.hpp"
#include "tinyvox/scoring.hpp"
#include "tinyvox/subsetting.hpp"

// nlohmann::json conversions for the toolkit's value types. Readers are
// strict: a missing or mistyped field raises Error naming the field.

namespace tinyvox {

using Json = nlohmann::json;

void to_json(Json& j, const MinMeanMax& v);
void to_json(Json& j, const DatasetStats& v);

void to_json(Json& j, const ScheduleSpec& v);
void from_json(const Json& j, ScheduleSpec& v);
void to_json(Json& j, const FreezeSpec& v);
void from_json(const Json& j, FreezeSpec& v);
void to_json(Json& j, const LossParams& v);
void from_json(const Json& j, LossParams& v);
void to_json(Json& j, const SamplingSpec& v);
void from_json(const Json& j, SamplingSpec& v);
void to_json(Json& j, const MaskSpec& v);
void from_json(const Json& j, MaskSpec& v);

void to_json(Json& j, const BatchPlan& v);
void to_json(Json& j, const MaskPlan& v);
void to_json(Json& j, const EerResult& v);
void to_json(Json& j, const GradientCheckReport& v);

/// Provenance record written next to every carved or subsetted manifest.
Json subset_provenance(SubsetKind kind, const SubsetParams& p, const Manifest& source, const Manifest& result);
Json carve_provenance(const CarveParams& p, const Manifest& source, const CarveResult& result);

/// Hex form of a 64-bit digest.
std::string hex_digest(std::uint64_t digest);

/// Doubles that may be infinite or NaN serialize as null.
Json nullable_number(double v);

namespace json_detail {
/// Fetches a required field, converting with get<T>(); throws Error naming
/// the field on absence or type mismatch.
template <typename T>
T require(const Json& j, const char* key) {
  if (!j.is_object()) throw Error(std::string("expected a JSON object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(std::string("field '") + key + "' has the wrong type");
  }
}
}  // namespace json_detail

}  // namespace tinyvox
