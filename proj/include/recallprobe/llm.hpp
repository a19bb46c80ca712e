// Copyright 2026 The recallprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recallprobe/catalog.hpp"
#include "recallprobe/error.hpp"

namespace recallprobe::llm {

using Millis = std::chrono::milliseconds;

enum class ChatRole { kSystem, kUser, kAssistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::kUser;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 512;

  /// Throws ConfigError unless there is a user message, temperature >= 0 and
  /// max_output_tokens > 0.
  void validate() const;
  const ChatMessage& last_user_message() const;
  /// Chat-completions request body.
  nlohmann::json to_wire(std::string_view model) const;

  bool operator==(const ChatRequest&) const = default;
};

struct RetryPolicy {
  Millis per_attempt_timeout{30'000};
  int max_retries = 3;
  Millis wait_min{500};
  Millis wait_max{2'000};
  std::uint64_t seed = 0;

  void validate() const;
};

struct QaExample {
  std::string question;
  std::string answer;
};

/// Generation prompt parts. cot_steps holds exactly three steps in order:
/// name-based, services/products-based, location-based.
struct PromptTemplate {
  std::string language;
  std::string task_description;
  std::vector<std::string> cot_steps;
  std::vector<QaExample> qa_examples;
  // Wording of the final question; "{name}" and "{type}" are substituted.
  std::string target_format;

  void validate() const;
};

PromptTemplate english_generation_template();
PromptTemplate chinese_generation_template();

/// "english", "chinese", or a path to a JSON template file.
PromptTemplate load_prompt_template(std::string_view name_or_path);
PromptTemplate prompt_template_from_json(const nlohmann::json& j);

/// Few-shot example for the validation (rethink) prompt.
struct LabeledExample {
  std::string shop_name;
  std::string shop_type;
  std::string query;
  bool keep = true;
  std::string reason;
};

std::vector<LabeledExample> default_validation_examples();

ChatRequest assemble_generation_prompt(const Shop& shop, const PromptTemplate& tmpl);

/// Throws ConfigError on an empty example list or empty query.
ChatRequest assemble_validation_prompt(const Shop& shop, std::string_view query_text,
                                       std::span<const LabeledExample> examples);

// ---------------------------------------------------------------------------
// Transport and retry.

enum class AttemptStatus { kOk, kTimeout, kHttpError, kMalformed, kConnectionError };

std::string_view to_string(AttemptStatus s);

struct TransportReply {
  AttemptStatus status = AttemptStatus::kOk;
  std::string text;
  int http_status = 0;
  std::string detail;
};

/// One request/response exchange with a chat endpoint. Implementations must
/// give up once `timeout` has elapsed and report kTimeout.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual TransportReply send(const ChatRequest& request, Millis timeout) = 0;
};

struct EndpointConfig {
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  // Name of the environment variable holding the bearer token; empty means
  // no Authorization header.
  std::string api_key_env;
};

class HttpChatTransport : public ChatTransport {
 public:
  /// Throws ConfigError when api_key_env names an unset variable.
  explicit HttpChatTransport(EndpointConfig endpoint);
  TransportReply send(const ChatRequest& request, Millis timeout) override;

 private:
  EndpointConfig endpoint_;
  std::string api_key_;
};

/// Parses a chat-completions response body; nullopt when malformed.
std::optional<std::string> parse_completion_body(std::string_view body);

using Sleeper = std::function<void(Millis)>;
Sleeper real_sleeper();

struct ScriptedStep {
  Millis delay{0};
  AttemptStatus outcome = AttemptStatus::kOk;
  std::string text;
};

/// Mock transport replaying a scripted sequence of {delay, outcome}, one step
/// per request; the last step repeats once the script is exhausted. A step
/// whose delay reaches the timeout is reported as kTimeout after sleeping
/// for the timeout.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<ScriptedStep> steps, Sleeper sleeper = real_sleeper());
  TransportReply send(const ChatRequest& request, Millis timeout) override;

  int calls() const;
  std::vector<ChatRequest> requests() const;

 private:
  std::vector<ScriptedStep> steps_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
  std::vector<ChatRequest> requests_;
};

/// Mock transport answering from canned replies keyed by a substring of the
/// last user message; the longest matching key wins and "*" is the fallback.
class ReplayTransport : public ChatTransport {
 public:
  explicit ReplayTransport(std::map<std::string, std::string> replies);
  static ReplayTransport from_json(const nlohmann::json& j);
  TransportReply send(const ChatRequest& request, Millis timeout) override;

 private:
  std::map<std::string, std::string> replies_;
};

struct AttemptRecord {
  int attempt = 0;  // 1-based
  AttemptStatus status = AttemptStatus::kOk;
  Millis elapsed{0};
  Millis wait_after{0};  // wait before the next attempt, 0 for the last
  std::string detail;
};

struct Completion {
  std::string text;
  std::vector<AttemptRecord> attempts;
};

enum class TransportErrorKind { kTimeoutExhausted, kHttp, kMalformed, kConnection };

std::string_view to_string(TransportErrorKind k);

class TransportError : public Error {
 public:
  TransportError(TransportErrorKind kind, std::vector<AttemptRecord> attempts);

  TransportErrorKind kind() const { return kind_; }
  const std::vector<AttemptRecord>& attempts() const { return attempts_; }

 private:
  TransportErrorKind kind_;
  std::vector<AttemptRecord> attempts_;
};

/// Serializes dispatch to at most `requests_per_minute`; <= 0 disables it.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute = 0.0);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

/// The wait schedule for a policy: max_retries draws from
/// [wait_min, wait_max] using the policy seed.
std::vector<Millis> wait_schedule(const RetryPolicy& policy);

/// Sends `request` until one attempt succeeds or 1 + max_retries attempts
/// have failed. An attempt that outlives per_attempt_timeout is a failure
/// even if the transport eventually answered. Throws TransportError carrying
/// every attempt record; the kind is kTimeoutExhausted when every attempt
/// timed out, otherwise the kind of the last failure.
Completion complete(const ChatRequest& request, const RetryPolicy& policy,
                    ChatTransport& transport, RateLimiter* limiter = nullptr,
                    const Sleeper& sleeper = real_sleeper());

/// Bundles a transport with its policy and a shared rate limiter. Safe for
/// concurrent use when the transport is.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatTransport> transport, RetryPolicy policy,
          double requests_per_minute = 0.0, Sleeper sleeper = real_sleeper());

  Completion complete(const ChatRequest& request);
  const RetryPolicy& policy() const { return policy_; }

 private:
  std::shared_ptr<ChatTransport> transport_;
  RetryPolicy policy_;
  std::shared_ptr<RateLimiter> limiter_;
  Sleeper sleeper_;
};

}  // namespace recallprobe::llm
