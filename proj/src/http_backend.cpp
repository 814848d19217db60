// Copyright 2026 The ASEE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>

#include "asee/errors.hpp"
#include "asee/gateway.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace asee::gateway {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("backend endpoint '" + url + "' is not an http(s) URL");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const BackendConfig& config, const json& body) {
  const Endpoint ep = split_endpoint(config.endpoint);
  httplib::Client client(ep.origin);
  if (!client.is_valid()) {
    throw InvalidArgument("unsupported backend endpoint '" + config.endpoint + "'");
  }
  const auto timeout = std::chrono::milliseconds(config.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!config.auth_token_env.empty()) {
    const char* token = std::getenv(config.auth_token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw BackendRefused("auth token variable " + config.auth_token_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  auto res = client.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + ep.origin + " failed: " +
                         httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 408 || status == 429 || status >= 500) {
    throw TransportError("backend returned HTTP " + std::to_string(status));
  }
  if (status < 200 || status >= 300) {
    throw BackendRefused("backend returned HTTP " + std::to_string(status));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransportError("backend returned a non-JSON body");
  }
}

}  // namespace

HttpGenerationBackend::HttpGenerationBackend(BackendConfig config)
    : config_(std::move(config)) {
  split_endpoint(config_.endpoint);
}

std::string HttpGenerationBackend::id() const {
  return config_.model.empty() ? config_.endpoint : config_.model;
}

std::string HttpGenerationBackend::complete(const GenerationRequest& request) {
  json body = {{"prompt", request.prompt},
               {"max_tokens", request.max_output_tokens},
               {"temperature", request.temperature}};
  if (!config_.model.empty()) body["model"] = config_.model;
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

  const json reply = post_json(config_, body);
  try {
    const auto& choice = reply.at("choices").at(0);
    if (choice.contains("text")) return choice.at("text").get<std::string>();
    return choice.at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransportError("completion reply lacks choices[0].text");
  }
}

HttpEmbeddingBackend::HttpEmbeddingBackend(BackendConfig config)
    : config_(std::move(config)) {
  split_endpoint(config_.endpoint);
}

std::string HttpEmbeddingBackend::id() const {
  return config_.model.empty() ? config_.endpoint : config_.model;
}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed(
    std::span<const std::string> texts) {
  json body = {{"input", std::vector<std::string>(texts.begin(), texts.end())}};
  if (!config_.model.empty()) body["model"] = config_.model;

  const json reply = post_json(config_, body);
  std::vector<std::vector<double>> out(texts.size());
  try {
    const auto& data = reply.at("data");
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& item = data.at(i);
      const std::size_t index = item.contains("index") ? item.at("index").get<std::size_t>() : i;
      if (index >= out.size()) throw TransportError("embedding index out of range");
      out[index] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const json::exception&) {
    throw TransportError("embedding reply lacks data[].embedding");
  }
  return out;
}

HttpRerankBackend::HttpRerankBackend(BackendConfig config) : config_(std::move(config)) {
  split_endpoint(config_.endpoint);
}

std::string HttpRerankBackend::id() const {
  return config_.model.empty() ? config_.endpoint : config_.model;
}

std::vector<double> HttpRerankBackend::score(const std::string& query,
                                             std::span<const std::string> documents) {
  json body = {{"query", query},
               {"documents", std::vector<std::string>(documents.begin(), documents.end())}};
  if (!config_.model.empty()) body["model"] = config_.model;

  const json reply = post_json(config_, body);
  std::vector<double> scores(documents.size(), 0.0);
  try {
    for (const auto& item : reply.at("results")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= scores.size()) throw TransportError("rerank index out of range");
      scores[index] = item.at("relevance_score").get<double>();
    }
  } catch (const json::exception&) {
    throw TransportError("rerank reply lacks results[].relevance_score");
  }
  return scores;
}

}  // namespace asee::gateway
