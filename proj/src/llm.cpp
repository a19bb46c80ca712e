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

#include "recallprobe/llm.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "recallprobe/text.hpp"

namespace recallprobe::llm {

namespace {

std::string substitute(std::string tmpl, std::string_view key, std::string_view value) {
  for (auto pos = tmpl.find(key); pos != std::string::npos;
       pos = tmpl.find(key, pos + value.size())) {
    tmpl.replace(pos, key.size(), value);
  }
  return tmpl;
}

std::string shop_line(const PromptTemplate& tmpl, const Shop& shop) {
  return substitute(substitute(tmpl.target_format, "{name}", shop.name), "{type}",
                    shop.shop_type);
}

}  // namespace

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::kSystem: return "system";
    case ChatRole::kUser: return "user";
    case ChatRole::kAssistant: return "assistant";
  }
  return "user";
}

void ChatRequest::validate() const {
  const bool has_user = std::any_of(messages.begin(), messages.end(),
                                    [](const ChatMessage& m) { return m.role == ChatRole::kUser; });
  if (!has_user) throw ConfigError("chat request needs at least one user message");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_output_tokens <= 0) throw ConfigError("max_output_tokens must be positive");
}

const ChatMessage& ChatRequest::last_user_message() const {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == ChatRole::kUser) return *it;
  }
  throw ConfigError("chat request has no user message");
}

nlohmann::json ChatRequest::to_wire(std::string_view model) const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.text}});
  }
  return {{"model", std::string(model)},
          {"messages", std::move(msgs)},
          {"temperature", temperature},
          {"max_tokens", max_output_tokens},
          {"stream", false}};
}

void RetryPolicy::validate() const {
  if (per_attempt_timeout.count() <= 0) throw ConfigError("per_attempt_timeout must be > 0");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (wait_min.count() < 0) throw ConfigError("wait interval lower bound must be >= 0");
  if (wait_max < wait_min) throw ConfigError("wait interval upper bound below lower bound");
}

void PromptTemplate::validate() const {
  if (text::trim(task_description).empty()) throw ConfigError("template has no task description");
  if (cot_steps.size() != 3) {
    throw ConfigError("template needs exactly 3 generation steps, got " +
                      std::to_string(cot_steps.size()));
  }
  for (const auto& s : cot_steps) {
    if (text::trim(s).empty()) throw ConfigError("template has an empty generation step");
  }
  if (qa_examples.empty()) throw ConfigError("template needs at least one QA example");
  if (target_format.find("{name}") == std::string::npos ||
      target_format.find("{type}") == std::string::npos) {
    throw ConfigError("template target_format must mention {name} and {type}");
  }
}

PromptTemplate english_generation_template() {
  PromptTemplate t;
  t.language = "en";
  t.task_description =
      "You help test the search box of a local-services shopping app. Given a target shop, "
      "write the search queries that ordinary users would type when they want to find exactly "
      "this shop. Work through the three steps below, then answer with three labeled sections "
      "[name], [service_product] and [location], each a numbered list of short queries. "
      "Do not add explanations.";
  t.cot_steps = {
      "Name-based: users type the full shop name, a shortened form of it, or words taken from "
      "it, such as the brand part without the branch suffix.",
      "Services/products-based: users type what the shop sells or offers, alone or combined with "
      "part of the shop name.",
      "Location-based: users combine what they want with a place, such as the branch area named "
      "in the shop name or the city.",
  };
  t.qa_examples = {
      {"Shop name: Chen's hardware\nShop type: hardware store",
       "[name]\n1. Chen's hardware\n2. Chen's\n[service_product]\n1. hardware store\n"
       "2. Chen's hardware store\n[location]\n1. hardware store Beijing"},
      {"Shop name: Ma's burgers\nShop type: fast food",
       "[name]\n1. Ma's burgers\n2. Ma's\n[service_product]\n1. hamburgers\n2. Ma's hamburgers\n"
       "[location]\n1. hamburgers Shanghai"},
  };
  t.target_format = "Shop name: {name}\nShop type: {type}";
  return t;
}

PromptTemplate chinese_generation_template() {
  PromptTemplate t;
  t.language = "zh";
  t.task_description =
      "你是一名本地生活电商应用的搜索测试助手。给定目标商户，请写出普通用户想找到这家商户时"
      "会在搜索框中输入的搜索词。请按下面三个步骤思考，然后用 [name]、[service_product]、"
      "[location] 三个带标签的小节作答，每个小节是一个编号列表，不要解释。";
  t.cot_steps = {
      "基于店名：用户会输入完整店名、店名简称或店名中的部分字词，例如去掉分店名后的品牌部分。",
      "基于服务/商品：用户会输入商户提供的服务或商品，或把它们与店名的一部分组合起来。",
      "基于位置：用户会把需求与地点组合起来，例如店名中的分店地名或所在城市。",
  };
  t.qa_examples = {
      {"店名：老味道火锅\n类型：北京火锅",
       "[name]\n1. 老味道火锅\n2. 老味道\n[service_product]\n1. 北京火锅\n2. 老味道涮肉\n"
       "[location]\n1. 火锅 北京"},
      {"店名：陈氏五金\n类型：五金店",
       "[name]\n1. 陈氏五金\n2. 陈氏\n[service_product]\n1. 五金店\n[location]\n1. 五金店 上海"},
  };
  t.target_format = "店名：{name}\n类型：{type}";
  return t;
}

PromptTemplate prompt_template_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  t.language = j.value("language", std::string{});
  t.task_description = j.value("task_description", std::string{});
  t.cot_steps = j.value("cot_steps", std::vector<std::string>{});
  for (const auto& ex : j.value("qa_examples", nlohmann::json::array())) {
    t.qa_examples.push_back({ex.at("question").get<std::string>(),
                             ex.at("answer").get<std::string>()});
  }
  t.target_format = j.value("target_format", std::string("Shop name: {name}\nShop type: {type}"));
  t.validate();
  return t;
}

PromptTemplate load_prompt_template(std::string_view name_or_path) {
  if (name_or_path.empty() || name_or_path == "english") return english_generation_template();
  if (name_or_path == "chinese") return chinese_generation_template();
  std::ifstream in{std::string(name_or_path)};
  if (!in) throw ConfigError("cannot open prompt template: " + std::string(name_or_path));
  try {
    return prompt_template_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad prompt template " + std::string(name_or_path) + ": " + e.what());
  }
}

std::vector<LabeledExample> default_validation_examples() {
  return {
      {"Chen's hardware", "hardware store", "Chen's", true,
       "users shorten a shop name to its brand"},
      {"Ma's burgers", "fast food", "hamburgers", true, "users search for what the shop sells"},
      {"Lily hair studio", "hairdressing salon", "a barber", false,
       "a barber is a different kind of business than a hairdressing salon"},
      {"A supermarket", "supermarket", "supermarket near A", false,
       "A is part of the shop name, not a place"},
  };
}

ChatRequest assemble_generation_prompt(const Shop& shop, const PromptTemplate& tmpl) {
  tmpl.validate();
  if (!validate_shop(shop).empty()) throw ConfigError("cannot build a prompt for an invalid shop");
  std::string system = tmpl.task_description;
  for (std::size_t i = 0; i < tmpl.cot_steps.size(); ++i) {
    system += "\n" + std::to_string(i + 1) + ". " + tmpl.cot_steps[i];
  }
  ChatRequest req;
  req.messages.push_back({ChatRole::kSystem, std::move(system)});
  for (const auto& ex : tmpl.qa_examples) {
    req.messages.push_back({ChatRole::kUser, ex.question});
    req.messages.push_back({ChatRole::kAssistant, ex.answer});
  }
  req.messages.push_back({ChatRole::kUser, shop_line(tmpl, shop)});
  return req;
}

ChatRequest assemble_validation_prompt(const Shop& shop, std::string_view query_text,
                                       std::span<const LabeledExample> examples) {
  if (text::trim(query_text).empty()) throw ConfigError("validation query is empty");
  if (examples.empty()) throw ConfigError("validation prompt needs labeled examples");
  auto ask = [](std::string_view name, std::string_view type, std::string_view query) {
    return "Shop name: " + std::string(name) + "\nShop type: " + std::string(type) +
           "\nQuery: " + std::string(query);
  };
  ChatRequest req;
  req.messages.push_back(
      {ChatRole::kSystem,
       "You review search queries written for testing a shopping app. For each shop and query, "
       "decide whether an ordinary user would plausibly type this query to find this shop. "
       "Start the answer with KEEP or DROP, then give one short reason."});
  for (const auto& ex : examples) {
    req.messages.push_back({ChatRole::kUser, ask(ex.shop_name, ex.shop_type, ex.query)});
    req.messages.push_back(
        {ChatRole::kAssistant, std::string(ex.keep ? "KEEP" : "DROP") + ": " + ex.reason});
  }
  req.messages.push_back({ChatRole::kUser, ask(shop.name, shop.shop_type, query_text)});
  return req;
}

// ---------------------------------------------------------------------------

std::string_view to_string(AttemptStatus s) {
  switch (s) {
    case AttemptStatus::kOk: return "ok";
    case AttemptStatus::kTimeout: return "timeout";
    case AttemptStatus::kHttpError: return "http_error";
    case AttemptStatus::kMalformed: return "malformed";
    case AttemptStatus::kConnectionError: return "connection_error";
  }
  return "unknown";
}

std::string_view to_string(TransportErrorKind k) {
  switch (k) {
    case TransportErrorKind::kTimeoutExhausted: return "timeout_exhausted";
    case TransportErrorKind::kHttp: return "http_error";
    case TransportErrorKind::kMalformed: return "malformed_response";
    case TransportErrorKind::kConnection: return "connection_error";
  }
  return "unknown";
}

namespace {

std::string error_message(TransportErrorKind kind, const std::vector<AttemptRecord>& attempts) {
  std::ostringstream out;
  out << "chat completion failed (" << to_string(kind) << ") after " << attempts.size()
      << " attempt(s)";
  for (const auto& a : attempts) {
    out << "; #" << a.attempt << ' ' << to_string(a.status) << ' ' << a.elapsed.count() << "ms";
    if (!a.detail.empty()) out << ' ' << a.detail;
  }
  return out.str();
}

}  // namespace

TransportError::TransportError(TransportErrorKind kind, std::vector<AttemptRecord> attempts)
    : Error(error_message(kind, attempts)), kind_(kind), attempts_(std::move(attempts)) {}

std::optional<std::string> parse_completion_body(std::string_view body) {
  try {
    auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) return std::nullopt;
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

HttpChatTransport::HttpChatTransport(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.base_url.empty()) throw ConfigError("chat endpoint base_url is empty");
  if (!endpoint_.api_key_env.empty()) {
    const char* v = std::getenv(endpoint_.api_key_env.c_str());
    if (v == nullptr) {
      throw ConfigError("environment variable " + endpoint_.api_key_env + " is not set");
    }
    api_key_ = v;
  }
}

TransportReply HttpChatTransport::send(const ChatRequest& request, Millis timeout) {
  httplib::Client client(endpoint_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(endpoint_.path, headers, request.to_wire(endpoint_.model).dump(),
                         "application/json");
  const auto elapsed = std::chrono::steady_clock::now() - start;
  if (!res) {
    const bool timed_out = elapsed >= timeout || res.error() == httplib::Error::ConnectionTimeout;
    return {timed_out ? AttemptStatus::kTimeout : AttemptStatus::kConnectionError, {}, 0,
            httplib::to_string(res.error())};
  }
  if (res->status < 200 || res->status >= 300) {
    return {AttemptStatus::kHttpError, {}, res->status, "HTTP " + std::to_string(res->status)};
  }
  auto content = parse_completion_body(res->body);
  if (!content) return {AttemptStatus::kMalformed, {}, res->status, "unparseable body"};
  return {AttemptStatus::kOk, std::move(*content), res->status, {}};
}

Sleeper real_sleeper() {
  return [](Millis d) {
    if (d.count() > 0) std::this_thread::sleep_for(d);
  };
}

ScriptedTransport::ScriptedTransport(std::vector<ScriptedStep> steps, Sleeper sleeper)
    : steps_(std::move(steps)), sleeper_(std::move(sleeper)) {
  if (steps_.empty()) throw ConfigError("scripted transport needs at least one step");
}

TransportReply ScriptedTransport::send(const ChatRequest& request, Millis timeout) {
  ScriptedStep step;
  {
    std::lock_guard lock(mu_);
    step = steps_[std::min(next_, steps_.size() - 1)];
    ++next_;
    requests_.push_back(request);
  }
  if (step.delay >= timeout) {
    sleeper_(timeout);
    return {AttemptStatus::kTimeout, {}, 0, "scripted delay exceeds timeout"};
  }
  sleeper_(step.delay);
  if (step.outcome == AttemptStatus::kOk) return {AttemptStatus::kOk, step.text, 200, {}};
  return {step.outcome, {}, step.outcome == AttemptStatus::kHttpError ? 500 : 0, "scripted"};
}

int ScriptedTransport::calls() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(next_);
}

std::vector<ChatRequest> ScriptedTransport::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

ReplayTransport::ReplayTransport(std::map<std::string, std::string> replies)
    : replies_(std::move(replies)) {}

ReplayTransport ReplayTransport::from_json(const nlohmann::json& j) {
  const auto& obj = j.contains("replies") ? j.at("replies") : j;
  if (!obj.is_object()) throw ConfigError("canned replies must be a JSON object");
  return ReplayTransport(obj.get<std::map<std::string, std::string>>());
}

TransportReply ReplayTransport::send(const ChatRequest& request, Millis) {
  const std::string& prompt = request.last_user_message().text;
  const std::string* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& [key, reply] : replies_) {
    if (key == "*") continue;
    if (key.size() > best_len && prompt.find(key) != std::string::npos) {
      best = &reply;
      best_len = key.size();
    }
  }
  if (best == nullptr) {
    auto it = replies_.find("*");
    if (it == replies_.end()) return {AttemptStatus::kHttpError, {}, 404, "no canned reply"};
    best = &it->second;
  }
  return {AttemptStatus::kOk, *best, 200, {}};
}

RateLimiter::RateLimiter(double requests_per_minute) {
  if (requests_per_minute > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(60.0 / requests_per_minute));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::unique_lock lock(mu_);
  const auto now = std::chrono::steady_clock::now();
  const auto slot = std::max(now, next_);
  next_ = slot + interval_;
  lock.unlock();
  std::this_thread::sleep_until(slot);
}

std::vector<Millis> wait_schedule(const RetryPolicy& policy) {
  // Plain modulo over mt19937_64 rather than uniform_int_distribution, whose
  // output differs between standard libraries.
  std::mt19937_64 rng(policy.seed);
  const auto lo = static_cast<std::uint64_t>(policy.wait_min.count());
  const auto span = static_cast<std::uint64_t>(policy.wait_max.count()) - lo + 1;
  std::vector<Millis> out;
  for (int i = 0; i < policy.max_retries; ++i) {
    out.emplace_back(static_cast<long long>(lo + rng() % span));
  }
  return out;
}

Completion complete(const ChatRequest& request, const RetryPolicy& policy,
                    ChatTransport& transport, RateLimiter* limiter, const Sleeper& sleeper) {
  request.validate();
  policy.validate();
  const auto waits = wait_schedule(policy);
  std::vector<AttemptRecord> attempts;
  const int max_attempts = 1 + policy.max_retries;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (limiter != nullptr) limiter->acquire();
    const auto start = std::chrono::steady_clock::now();
    TransportReply reply = transport.send(request, policy.per_attempt_timeout);
    const auto elapsed =
        std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - start);
    AttemptRecord rec{attempt, reply.status, elapsed, Millis{0}, reply.detail};
    if (rec.status == AttemptStatus::kOk && elapsed > policy.per_attempt_timeout) {
      rec.status = AttemptStatus::kTimeout;
      rec.detail = "reply arrived after the attempt timeout";
    }
    if (rec.status == AttemptStatus::kOk) {
      attempts.push_back(std::move(rec));
      return {std::move(reply.text), std::move(attempts)};
    }
    if (attempt < max_attempts) rec.wait_after = waits[static_cast<std::size_t>(attempt - 1)];
    attempts.push_back(rec);
    if (attempt < max_attempts) sleeper(rec.wait_after);
  }

  const bool all_timeouts = std::all_of(attempts.begin(), attempts.end(), [](const auto& a) {
    return a.status == AttemptStatus::kTimeout;
  });
  TransportErrorKind kind = TransportErrorKind::kTimeoutExhausted;
  if (!all_timeouts) {
    switch (attempts.back().status) {
      case AttemptStatus::kMalformed: kind = TransportErrorKind::kMalformed; break;
      case AttemptStatus::kConnectionError: kind = TransportErrorKind::kConnection; break;
      case AttemptStatus::kTimeout: kind = TransportErrorKind::kTimeoutExhausted; break;
      default: kind = TransportErrorKind::kHttp; break;
    }
  }
  throw TransportError(kind, std::move(attempts));
}

Gateway::Gateway(std::shared_ptr<ChatTransport> transport, RetryPolicy policy,
                 double requests_per_minute, Sleeper sleeper)
    : transport_(std::move(transport)),
      policy_(policy),
      limiter_(std::make_shared<RateLimiter>(requests_per_minute)),
      sleeper_(std::move(sleeper)) {
  if (!transport_) throw ConfigError("gateway needs a transport");
  policy_.validate();
}

Completion Gateway::complete(const ChatRequest& request) {
  return llm::complete(request, policy_, *transport_, limiter_.get(), sleeper_);
}

}  // namespace recallprobe::llm
