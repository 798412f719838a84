/*
    Copyright (c) 2026 The miniops Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "miniops/ingester/ingester.hpp"

#include <algorithm>

#include "miniops/common/codec.hpp"
#include "miniops/common/error.hpp"

namespace miniops::ingester {

TransformHook tag_enrich_hook(std::string hook_id, std::string topic, TagMap tags) {
  return {std::move(hook_id), std::move(topic), [tags = std::move(tags)](std::vector<Record> in) {
            for (auto& r : in) {
              for (const auto& [k, v] : tags) r.tags[k] = v;
            }
            return in;
          }};
}

TransformHook drop_below_hook(std::string hook_id, std::string topic, double min_value) {
  return {std::move(hook_id), std::move(topic), [min_value](std::vector<Record> in) {
            std::erase_if(in, [&](const Record& r) { return r.kind == RecordKind::metric && r.value < min_value; });
            return in;
          }};
}

TransformHook hook_from_json(const Json& j) {
  const auto id = j.at("hook_id").get<std::string>();
  const auto topic = j.at("topic").get<std::string>();
  const auto type = j.at("type").get<std::string>();
  if (type == "tag_enrich") return tag_enrich_hook(id, topic, j.at("tags").get<TagMap>());
  if (type == "drop_below") return drop_below_hook(id, topic, j.at("min_value").get<double>());
  throw Error(Errc::invalid_argument, "unknown hook type '" + type + "'");
}

// ---- DedupWindow ----

DedupWindow::DedupWindow(EpochMs horizon_ms, EpochMs bucket_ms) : horizon_ms_(horizon_ms), bucket_ms_(bucket_ms) {
  if (horizon_ms <= 0 || bucket_ms <= 0) throw Error(Errc::invalid_argument, "dedup horizon and bucket must be positive");
}

void DedupWindow::expire_locked(EpochMs now) {
  // A bucket's youngest id was inserted before bucket end, so it has been held
  // for at least the horizon once end + horizon <= now.
  while (!buckets_.empty() && buckets_.begin()->first + bucket_ms_ + horizon_ms_ <= now) {
    for (const auto& id : buckets_.begin()->second) {
      auto it = seen_.find(id);
      if (it != seen_.end() && it->second == buckets_.begin()->first) seen_.erase(it);
    }
    buckets_.erase(buckets_.begin());
  }
}

DedupWindow::Claim DedupWindow::claim(const std::string& batch_id, EpochMs now) {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !in_flight_.contains(batch_id); });
  expire_locked(now);
  if (seen_.contains(batch_id)) return Claim::duplicate;
  in_flight_.insert(batch_id);
  return Claim::fresh;
}

void DedupWindow::commit(const std::string& batch_id, EpochMs now) {
  {
    std::lock_guard lock(mu_);
    in_flight_.erase(batch_id);
    EpochMs b = now / bucket_ms_;
    if (now % bucket_ms_ != 0 && now < 0) --b;
    b *= bucket_ms_;
    seen_[batch_id] = b;
    buckets_[b].push_back(batch_id);
  }
  cv_.notify_all();
}

void DedupWindow::release(const std::string& batch_id) {
  {
    std::lock_guard lock(mu_);
    in_flight_.erase(batch_id);
  }
  cv_.notify_all();
}

bool DedupWindow::contains(const std::string& batch_id) const {
  std::lock_guard lock(mu_);
  return seen_.contains(batch_id);
}

std::size_t DedupWindow::size() const {
  std::lock_guard lock(mu_);
  return seen_.size();
}

// ---- Ingester ----

Ingester::Ingester(mqueue::Broker& broker, IngesterOptions options, const Clock& clock)
    : broker_(broker), clock_(clock), dedup_(options.dedup_horizon_ms) {}

void Ingester::register_hook(TransformHook hook) {
  if (!hook.apply) throw Error(Errc::invalid_argument, "hook '" + hook.hook_id + "' has no transformation");
  std::lock_guard lock(hooks_mu_);
  if (hooks_.contains(hook.input_topic)) {
    throw Error(Errc::already_exists, "topic '" + hook.input_topic + "' already has hook '" +
                                          hooks_.at(hook.input_topic).hook_id + "'");
  }
  const std::string topic = hook.input_topic;
  hooks_.emplace(topic, std::move(hook));
}

std::vector<std::string> Ingester::hooked_topics() const {
  std::lock_guard lock(hooks_mu_);
  std::vector<std::string> out;
  for (const auto& [t, _] : hooks_) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, std::string>> Ingester::transform(const Batch& batch) const {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Record>> by_topic;
  for (const auto& r : batch.records) {
    auto [it, inserted] = by_topic.try_emplace(r.topic);
    if (inserted) order.push_back(r.topic);
    it->second.push_back(r);
  }
  std::vector<Record> out;
  {
    std::lock_guard lock(hooks_mu_);
    for (const auto& topic : order) {
      std::vector<Record> group = std::move(by_topic[topic]);
      if (auto h = hooks_.find(topic); h != hooks_.end()) group = h->second.apply(std::move(group));
      std::move(group.begin(), group.end(), std::back_inserter(out));
    }
  }
  std::vector<std::pair<std::string, std::string>> messages;
  messages.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    Json j = record_to_json(out[i]);
    j["_batch"] = batch.batch_id;
    j["_seq"] = i;
    messages.emplace_back(out[i].topic, j.dump());
  }
  return messages;
}

Ack Ingester::receive_batch(std::string_view compressed) {
  std::string text;
  try {
    text = gzip_decompress(compressed);
  } catch (const Error&) {
    std::lock_guard lock(stats_mu_);
    ++stats_.rejected;
    throw;
  }
  return receive_json(text);
}

Ack Ingester::receive_json(std::string_view json_text) {
  Batch batch;
  try {
    Json doc;
    try {
      doc = Json::parse(json_text);
    } catch (const Json::exception& e) {
      throw Error(Errc::invalid_argument, std::string("malformed batch JSON: ") + e.what());
    }
    batch = batch_from_json(doc);
  } catch (...) {
    std::lock_guard lock(stats_mu_);
    ++stats_.rejected;
    throw;
  }
  return receive(batch);
}

Ack Ingester::receive(const Batch& batch) {
  {
    std::lock_guard lock(stats_mu_);
    ++stats_.batches;
  }
  if (!available_) {
    std::lock_guard lock(stats_mu_);
    ++stats_.unavailable;
    throw Error(Errc::unavailable, "ingester unavailable");
  }
  Ack ack;
  ack.batch_id = batch.batch_id;
  if (dedup_.claim(batch.batch_id, clock_.now_ms()) == DedupWindow::Claim::duplicate) {
    std::lock_guard lock(stats_mu_);
    ++stats_.duplicates;
    ack.duplicate = true;
    return ack;
  }
  try {
    auto messages = transform(batch);
    if (!messages.empty()) {
      try {
        ack.last_offsets = broker_.publish_batch(messages);
      } catch (const Error& e) {
        if (e.code() == Errc::invalid_argument) throw;
        throw Error(Errc::unavailable, std::string("queue unavailable: ") + e.what());
      }
    }
    ack.published = messages.size();
  } catch (const Error& e) {
    dedup_.release(batch.batch_id);
    std::lock_guard lock(stats_mu_);
    ++(e.code() == Errc::unavailable ? stats_.unavailable : stats_.rejected);
    throw;
  } catch (...) {
    dedup_.release(batch.batch_id);
    throw;
  }
  dedup_.commit(batch.batch_id, clock_.now_ms());
  std::lock_guard lock(stats_mu_);
  stats_.records_published += ack.published;
  return ack;
}

void Ingester::set_available(bool available) { available_ = available; }
bool Ingester::available() const { return available_; }

IngesterStats Ingester::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

}  // namespace miniops::ingester
