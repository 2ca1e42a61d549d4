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

#include "tinyvox/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "tinyvox/error.hpp"

namespace tinyvox {

using json_detail::require;

void to_json(Json& j, const MinMeanMax& v) { j = Json{{"mean", v.mean}, {"min", v.min}, {"max", v.max}}; }

void to_json(Json& j, const DatasetStats& v) {
  j = Json{{"duration_hours", v.duration_hours},
           {"n_speakers", v.n_speakers},
           {"n_sessions", v.n_sessions},
           {"n_utterances", v.n_utterances},
           {"sessions_per_speaker", v.sessions_per_speaker},
           {"utterances_per_session", v.utterances_per_session}};
}

void to_json(Json& j, const ScheduleSpec& v) {
  j = Json{{"kind", to_string(v.kind)},
           {"max_lr", v.max_lr},
           {"min_lr", v.min_lr},
           {"n_steps", v.n_steps},
           {"n_cycles", v.n_cycles}};
}

void from_json(const Json& j, ScheduleSpec& v) {
  const auto kind = parse_schedule_kind(require<std::string>(j, "kind"));
  if (!kind) throw Error("unknown schedule kind '" + j.at("kind").get<std::string>() + "'");
  v.kind = *kind;
  v.max_lr = require<double>(j, "max_lr");
  v.min_lr = require<double>(j, "min_lr");
  v.n_steps = require<std::int64_t>(j, "n_steps");
  v.n_cycles = require<int>(j, "n_cycles");
}

void to_json(Json& j, const FreezeSpec& v) {
  j = Json{{"freeze_all_until_step", v.freeze_all_until_step},
           {"always_trainable_groups", v.always_trainable_groups},
           {"groups_frozen_entire_run", v.groups_frozen_entire_run}};
}

void from_json(const Json& j, FreezeSpec& v) {
  v.freeze_all_until_step = require<std::int64_t>(j, "freeze_all_until_step");
  v.always_trainable_groups = require<std::set<std::string>>(j, "always_trainable_groups");
  v.groups_frozen_entire_run = require<std::set<std::string>>(j, "groups_frozen_entire_run");
}

void to_json(Json& j, const LossParams& v) { j = Json{{"margin", v.margin}, {"scale", v.scale}}; }

void from_json(const Json& j, LossParams& v) {
  v.margin = require<double>(j, "margin");
  v.scale = require<double>(j, "scale");
}

void to_json(Json& j, const SamplingSpec& v) {
  j = Json{{"batch_size", v.batch_size}, {"chunk_seconds", v.chunk_seconds}, {"seed", v.seed}};
}

void from_json(const Json& j, SamplingSpec& v) {
  v.batch_size = require<int>(j, "batch_size");
  v.chunk_seconds = require<double>(j, "chunk_seconds");
  v.seed = require<std::uint64_t>(j, "seed");
}

void to_json(Json& j, const MaskSpec& v) {
  j = Json{{"mode", to_string(v.mode)},
           {"time_mask_count_min", v.time_mask_count_min},
           {"time_mask_count_max", v.time_mask_count_max},
           {"time_mask_length", v.time_mask_length},
           {"channel_mask_count_min", v.channel_mask_count_min},
           {"channel_mask_count_max", v.channel_mask_count_max},
           {"channel_mask_length", v.channel_mask_length},
           {"channel_fraction", v.channel_fraction},
           {"time_fraction", v.time_fraction}};
}

void from_json(const Json& j, MaskSpec& v) {
  const auto mode = parse_mask_mode(require<std::string>(j, "mode"));
  if (!mode) throw Error("unknown mask mode '" + j.at("mode").get<std::string>() + "'");
  v.mode = *mode;
  v.time_mask_count_min = require<int>(j, "time_mask_count_min");
  v.time_mask_count_max = require<int>(j, "time_mask_count_max");
  v.time_mask_length = require<int>(j, "time_mask_length");
  v.channel_mask_count_min = require<int>(j, "channel_mask_count_min");
  v.channel_mask_count_max = require<int>(j, "channel_mask_count_max");
  v.channel_mask_length = require<int>(j, "channel_mask_length");
  v.channel_fraction = require<double>(j, "channel_fraction");
  v.time_fraction = require<double>(j, "time_fraction");
}

void to_json(Json& j, const BatchPlan& v) {
  Json items = Json::array();
  for (const auto& item : v.items) {
    items.push_back(
        Json{{"utterance_id", item.utterance_id}, {"offset_seconds", item.offset_seconds}, {"repeat_pad", item.repeat_pad}});
  }
  j = Json{{"step", v.step}, {"items", std::move(items)}};
}

void to_json(Json& j, const MaskPlan& v) {
  j = Json{{"mode", to_string(v.mode)}, {"frames", v.frames}, {"channels", v.channels}};
  if (v.mode == MaskMode::fraction) {
    Json time = Json::array(), channel = Json::array();
    for (const auto& s : v.time_masks) time.push_back(s.start);
    for (const auto& s : v.channel_masks) channel.push_back(s.start);
    j["time_indices"] = std::move(time);
    j["channel_indices"] = std::move(channel);
  } else {
    Json time = Json::array(), channel = Json::array();
    for (const auto& s : v.time_masks) time.push_back(Json::array({s.start, s.length}));
    for (const auto& s : v.channel_masks) channel.push_back(Json::array({s.start, s.length}));
    j["time_masks"] = std::move(time);
    j["channel_masks"] = std::move(channel);
  }
}

void to_json(Json& j, const EerResult& v) {
  j = Json{{"eer", v.eer}, {"threshold", v.threshold}, {"n_target", v.n_target}, {"n_nontarget", v.n_nontarget}};
}

void to_json(Json& j, const GradientCheckReport& v) {
  j = Json{{"instances", v.instances},
           {"coordinates_checked", v.coordinates_checked},
           {"max_relative_error", v.max_relative_error},
           {"tolerance", v.tolerance},
           {"passed", v.passed}};
}

std::string hex_digest(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

Json nullable_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json subset_provenance(SubsetKind kind, const SubsetParams& p, const Manifest& source, const Manifest& result) {
  Json params{{"per_gender_speakers", p.per_gender_speakers}, {"utterances_per_speaker", p.utterances_per_speaker}};
  params["utterance_cap"] = p.utterance_cap ? Json(*p.utterance_cap) : Json(nullptr);
  return Json{{"operation", "subset"},
              {"kind", to_string(kind)},
              {"params", std::move(params)},
              {"seed", nullptr},
              {"source_manifest_digest", hex_digest(manifest_digest(source))},
              {"output_manifest_digest", hex_digest(manifest_digest(result))},
              {"n_utterances", result.size()}};
}

Json carve_provenance(const CarveParams& p, const Manifest& source, const CarveResult& result) {
  return Json{{"operation", "carve-validation"},
              {"params", Json{{"retain_fraction_threshold", p.retain_fraction_threshold}}},
              {"seed", p.seed},
              {"rng", "mt19937_64 keyed by splitmix64(seed, fnv1a64(speaker_id), fnv1a64(\"carve-validation\"))"},
              {"source_manifest_digest", hex_digest(manifest_digest(source))},
              {"train_manifest_digest", hex_digest(manifest_digest(result.train))},
              {"validation_manifest_digest", hex_digest(manifest_digest(result.validation))},
              {"n_train_utterances", result.train.size()},
              {"n_validation_utterances", result.validation.size()}};
}

}  // namespace tinyvox
