#include "biomech/llm/backend.hpp"

#include "biomech/core/text.hpp"
#include "biomech/llm/errors.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace biomech::llm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json bindings_json(const Bindings& bindings) {
  json j = json::object();
  for (const auto& [k, v] : bindings) j[k] = v;
  return j;
}

std::uint64_t bindings_hash(const Bindings& bindings) {
  const auto hex = text::sha256_hex(bindings_json(bindings).dump());
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

CompletionResult finished(std::string text, std::string backend) {
  if (text.empty()) throw GatewayError(GatewayError::Kind::empty_completion, backend + ": empty completion");
  CompletionResult r;
  r.text = std::move(text);
  r.backend = std::move(backend);
  return r;
}

}  // namespace

std::string request_hash(const RenderedRequest& request) {
  ordered_json key;
  key["model"] = request.request.model;
  key["temperature"] = request.request.temperature ? json(*request.request.temperature) : json(nullptr);
  key["max_tokens"] = request.request.max_tokens;
  key["system"] = request.prompt.system_text;
  key["user"] = request.prompt.user_text;
  return text::sha256_hex(key.dump());
}

std::chrono::milliseconds RetryPolicy::backoff_for(int retry) const {
  const double scale = std::pow(multiplier, retry);
  return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(initial_backoff.count()) * scale));
}

LiveConfig LiveConfig::from_env() {
  LiveConfig cfg;
  if (const char* key = std::getenv("OPENAI_API_KEY")) cfg.api_key = key;
  if (const char* url = std::getenv("OPENAI_BASE_URL")) cfg.base_url = url;
  return cfg;
}

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleeper)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

CompletionResult LiveBackend::complete(const RenderedRequest& request) {
  ordered_json body;
  body["model"] = request.request.model;
  body["messages"] = ordered_json::array(
      {{{"role", "system"}, {"content", request.prompt.system_text}},
       {{"role", "user"}, {"content", request.prompt.user_text}}});
  body["max_tokens"] = request.request.max_tokens;
  if (request.request.temperature) body["temperature"] = *request.request.temperature;
  const std::string payload = body.dump();
  const Headers headers{{"Authorization", "Bearer " + config_.api_key}};

  const auto started = std::chrono::steady_clock::now();
  std::string last_error;
  const int max_attempts = config_.retry.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const HttpResponse res = transport_->post("/chat/completions", payload, headers);
    if (res.status == 200) {
      CompletionResult result;
      try {
        const json j = json::parse(res.body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        result.text = content.is_string() ? content.get<std::string>() : std::string();
        if (const auto usage = j.find("usage"); usage != j.end()) {
          result.prompt_tokens = usage->value("prompt_tokens", 0);
          result.completion_tokens = usage->value("completion_tokens", 0);
        }
      } catch (const json::exception& e) {
        throw GatewayError(GatewayError::Kind::bad_response,
                           std::string("live: unexpected response body: ") + e.what());
      }
      if (result.text.empty()) {
        throw GatewayError(GatewayError::Kind::empty_completion, "live: empty completion");
      }
      result.backend = id();
      result.attempts = attempt;
      result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      return result;
    }
    last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status) + ": " + res.body;
    if (!is_transient_status(res.status)) {
      throw GatewayError(GatewayError::Kind::http_error, "live: " + last_error);
    }
    if (attempt < max_attempts) sleep_(config_.retry.backoff_for(attempt - 1));
  }
  throw GatewayError(GatewayError::Kind::retries_exhausted,
                     "live: retries exhausted after " + std::to_string(max_attempts) +
                         " attempts: " + last_error);
}

MockBackend::MockBackend(const json& table) {
  const auto entries = table.find("entries");
  if (entries == table.end() || !entries->is_array()) {
    throw ParseError("mock table needs an 'entries' array");
  }
  for (const auto& e : *entries) {
    const auto name = e.at("template").get<std::string>();
    const auto tid = parse_template(name);
    if (!tid) throw ParseError("mock table: unknown template '" + name + "'");
    Entry entry{*tid, {}, {}, false};
    if (const auto m = e.find("match"); m != e.end()) {
      for (const auto& [k, v] : m->items()) entry.match[k] = v.get<std::string>();
    }
    if (const auto r = e.find("response"); r != e.end()) {
      entry.responses.push_back(r->get<std::string>());
    } else if (const auto rs = e.find("responses"); rs != e.end() && !rs->empty()) {
      entry.responses = rs->get<std::vector<std::string>>();
      entry.pick_by_hash = true;
    } else {
      throw ParseError("mock table: entry for '" + name + "' has no response");
    }
    entries_.push_back(std::move(entry));
  }
}

std::shared_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mock table '" + path.string() + "'");
  try {
    return std::make_shared<MockBackend>(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

CompletionResult MockBackend::complete(const RenderedRequest& request) {
  const auto& bindings = request.request.bindings;
  for (const auto& entry : entries_) {
    if (entry.template_id != request.request.template_id) continue;
    bool matches = true;
    for (const auto& [k, v] : entry.match) {
      const auto it = bindings.find(k);
      if (it == bindings.end() || it->second != v) {
        matches = false;
        break;
      }
    }
    if (!matches) continue;
    const std::size_t pick = entry.pick_by_hash ? bindings_hash(bindings) % entry.responses.size() : 0;
    return finished(entry.responses[pick], id());
  }
  throw GatewayError(GatewayError::Kind::mock_miss,
                     "mock: no fixture for template '" +
                         std::string(template_name(request.request.template_id)) +
                         "' with bindings " + bindings_json(bindings).dump());
}

ReplayBackend::ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

CompletionResult ReplayBackend::complete(const RenderedRequest& request) {
  const auto key = request_hash(request);
  const auto path = dir_ / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw GatewayError(GatewayError::Kind::replay_miss,
                       "replay: no recording for request " + key + " (template '" +
                           std::string(template_name(request.request.template_id)) + "')");
  }
  try {
    return finished(json::parse(in).at("response").get<std::string>(), id());
  } catch (const json::exception& e) {
    throw GatewayError(GatewayError::Kind::bad_response, "replay: corrupt recording " + path.string() + ": " + e.what());
  }
}

void write_replay_entry(const std::filesystem::path& dir, const RenderedRequest& request,
                        const std::string& response) {
  std::filesystem::create_directories(dir);
  const auto key = request_hash(request);
  ordered_json j;
  j["key"] = key;
  j["template"] = template_name(request.request.template_id);
  j["bindings"] = bindings_json(request.request.bindings);
  j["model"] = request.request.model;
  j["response"] = response;
  std::ofstream out(dir / (key + ".json"), std::ios::binary | std::ios::trunc);
  out << j.dump(2) << "\n";
  if (!out) throw Error("cannot write replay entry " + key);
}

RecordingBackend::RecordingBackend(std::shared_ptr<CompletionBackend> inner, std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {}

CompletionResult RecordingBackend::complete(const RenderedRequest& request) {
  auto result = inner_->complete(request);
  std::lock_guard lock(write_mutex_);
  write_replay_entry(dir_, request, result.text);
  return result;
}

}  // namespace biomech::llm
