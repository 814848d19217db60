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

#include <atomic>

#include "asee/errors.hpp"
#include "asee/json_io.hpp"
#include "asee/schema_pool.hpp"
#include "asee/text.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asee;
using namespace asee::schema_pool;
using asee::testing::TempDir;

namespace {

Schema earthquake() {
  return Schema{"eq", "Earthquake", "", {{"magnitude", ""}, {"location", ""}}, Language::en, "maven"};
}

gateway::BackendConfig gen_config(int max_in_flight = 4) {
  gateway::BackendConfig c;
  c.kind = gateway::BackendKind::generation;
  c.max_in_flight = max_in_flight;
  return c;
}

gateway::GenerationClient responder_client(gateway::Responder r, int max_in_flight = 4) {
  return gateway::GenerationClient(
      gen_config(max_in_flight),
      std::make_shared<gateway::ScriptedGenerator>(std::map<std::string, std::string>{}, std::move(r)),
      [](std::chrono::milliseconds) {});
}

// Replies with a valid paraphrase of whichever schema the prompt carries.
std::optional<std::string> describe_all(const std::string& prompt) {
  const auto start = prompt.find("Schema:\n");
  const auto end = prompt.find('\n', start + 8);
  auto schema = io::Json::parse(prompt.substr(start + 8, end - start - 8));
  schema["description"] = "An event of type " + schema["name"].get<std::string>() + ".";
  for (auto& a : schema["arguments"]) {
    a["description"] = "The " + a["name"].get<std::string>() + " involved.";
  }
  return "```json\n" + schema.dump() + "\n```";
}

std::vector<Sample> corpus_with(std::size_t adhering, const std::string& schema_id) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < adhering + 3; ++i) {
    Sample s;
    s.sample_id = "d" + std::to_string(i);
    s.query = "text " + std::to_string(i);
    s.gold.push_back({i < adhering ? schema_id : "other", {{{"magnitude", {"5." + std::to_string(i)}}}}});
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("load_schemas reads records and rejects bad files") {
  TempDir dir;
  asee::testing::spit(dir.file("ok.jsonl"),
                      R"({"schema_id":"a","name":"A","arguments":[{"name":"x","description":""}]})"
                      "\n"
                      R"({"schema_id":"b","name":"B","arguments":["y"],"language":"zh"})"
                      "\n");
  const auto pool = load_schemas(dir.file("ok.jsonl"));
  CHECK(pool.size() == 2);
  CHECK(pool.find("b")->language == Language::zh);
  CHECK(pool.pool_id == dir.file("ok.jsonl"));

  asee::testing::spit(dir.file("dup.jsonl"),
                      R"({"schema_id":"a","name":"A","arguments":["x"]})"
                      "\n"
                      R"({"schema_id":"a","name":"B","arguments":["y"]})"
                      "\n");
  CHECK_THROWS_AS(load_schemas(dir.file("dup.jsonl")), DuplicateId);

  asee::testing::spit(dir.file("empty.jsonl"), "\n\n");
  CHECK_THROWS_AS(load_schemas(dir.file("empty.jsonl")), EmptyFile);

  asee::testing::spit(dir.file("bad.jsonl"),
                      R"({"schema_id":"a","name":"A","arguments":["x"]})"
                      "\n"
                      R"({"schema_id":"b","name":"B","arguments":[]})"
                      "\n");
  try {
    load_schemas(dir.file("bad.jsonl"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("pool files round-trip with paraphrases and metadata") {
  TempDir dir;
  SchemaPool pool;
  pool.pool_id = "p1";
  pool.created_at = "2026-01-01T00:00:00Z";
  pool.schemas["eq"] = earthquake();
  Schema described = earthquake();
  described.description = "Ground shaking.";
  pool.paraphrased["eq"] = ParaphrasedSchema{described, "eq", {"d1", "d2"}, std::nullopt};
  Schema other{"fl", "Flood", "", {{"area", ""}}, Language::en, ""};
  pool.schemas["fl"] = other;
  pool.paraphrased["fl"] = ParaphrasedSchema{other, "fl", {}, "paraphrase fallback: no JSON"};

  save_pool(dir.file("pool.jsonl"), pool);
  const auto loaded = load_schemas(dir.file("pool.jsonl"));
  CHECK(loaded == pool);
  CHECK(serialize_pool(loaded) == serialize_pool(pool));
  CHECK(loaded.best("eq")->description == "Ground shaking.");
}

TEST_CASE("select_demonstrations is deterministic and bounded") {
  const auto five = corpus_with(5, "eq");
  const auto a = select_demonstrations(earthquake(), five, 3, 11);
  const auto b = select_demonstrations(earthquake(), five, 3, 11);
  REQUIRE(a.size() == 3);
  CHECK(a == b);
  CHECK(std::is_sorted(a.begin(), a.end(),
                       [](const Sample& x, const Sample& y) { return x.sample_id < y.sample_id; }));
  for (const auto& s : a) CHECK(s.find_gold("eq") != nullptr);

  CHECK(select_demonstrations(earthquake(), corpus_with(0, "eq"), 3, 11).empty());
  CHECK(select_demonstrations(earthquake(), corpus_with(2, "eq"), 3, 11).size() == 2);

  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    differs = select_demonstrations(earthquake(), five, 3, seed) != a;
  }
  CHECK(differs);
}

TEST_CASE("paraphrase prompt rendering") {
  const auto demos = corpus_with(1, "eq");
  const std::string prompt =
      render_paraphrase_prompt(earthquake(), std::span(demos).first(1), default_paraphrase_template());
  CHECK(prompt.find(schema_prompt_json(earthquake())) != std::string::npos);
  CHECK(prompt.find("Text: text 0\nAnnotation: [{\"magnitude\":[\"5.0\"]}]") != std::string::npos);
  CHECK(render_paraphrase_prompt(earthquake(), {}, "{{schema_json}} / {{demonstrations}}")
            .ends_with("/ (none)"));
  CHECK_THROWS_AS(render_paraphrase_prompt(earthquake(), {}, "no placeholder"), TemplateError);
}

TEST_CASE("paraphrase_schema adds descriptions and keeps names") {
  const auto client = responder_client(describe_all);
  const auto p = paraphrase_schema(earthquake(), {}, client);
  CHECK_FALSE(p.warning);
  CHECK(p.paraphrase_of == "eq");
  CHECK(p.base.name == "Earthquake");
  REQUIRE(p.base.arguments.size() == 2);
  CHECK(p.base.arguments[0].name == "magnitude");
  CHECK(p.base.arguments[1].description == "The location involved.");
}

TEST_CASE("paraphrase_schema falls back on prose and renames") {
  std::atomic<int> calls{0};
  const auto prose = responder_client([&](const std::string&) -> std::optional<std::string> {
    ++calls;
    return "I cannot help with that.";
  });
  const auto p = paraphrase_schema(earthquake(), {}, prose);
  CHECK(calls == 2);
  REQUIRE(p.warning);
  CHECK(p.base == earthquake());

  const auto renamer = responder_client([](const std::string&) -> std::optional<std::string> {
    return R"({"name":"Earthquake","description":"d","arguments":[{"name":"magnitude","description":"m"},{"name":"place","description":"p"}]})";
  });
  const auto r = paraphrase_schema(earthquake(), {}, renamer);
  REQUIRE(r.warning);
  CHECK(r.base == earthquake());
}

TEST_CASE("paraphrase_schema recovers on the repair retry") {
  std::atomic<int> calls{0};
  const auto client = responder_client([&](const std::string& prompt) -> std::optional<std::string> {
    if (++calls == 1) return "```json\n{\"arguments\": 3}\n```";
    CHECK(prompt.find("could not be used") != std::string::npos);
    return describe_all(prompt);
  });
  const auto p = paraphrase_schema(earthquake(), {}, client);
  CHECK_FALSE(p.warning);
  CHECK(p.base.arguments[0].description == "The magnitude involved.");
}

TEST_CASE("adversarial paraphrase replies never change argument names") {
  asee::testing::Rng rng(3);
  const std::vector<std::string> replies{
      R"({"arguments":[{"name":"magnitude"},{"name":"location"},{"name":"extra"}]})",
      R"({"arguments":[{"name":"magnitude"}]})",
      R"({"arguments":[{"name":"magnitude"},{"name":"magnitude"}]})",
      R"({"arguments":[{"name":"Magnitude"},{"name":"location"}]})",
      R"({"name":"Quake","arguments":[{"name":"location","description":"x"},{"name":"magnitude"}]})",
      R"([1,2,3])",
      "{\"arguments\":[{\"name\":\"magnitude\",}]}",
      "",
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto client = responder_client([&](const std::string&) -> std::optional<std::string> {
      return replies[asee::testing::uniform(rng, 0, replies.size() - 1)];
    });
    const auto p = paraphrase_schema(earthquake(), {}, client);
    REQUIRE(p.base.arguments.size() == 2);
    CHECK(p.base.arguments[0].name == "magnitude");
    CHECK(p.base.arguments[1].name == "location");
    CHECK(p.base.name == "Earthquake");
  }
}

TEST_CASE("backend failures surface as GenerationFailed") {
  const auto client = responder_client([](const std::string&) -> std::optional<std::string> {
    throw TransportError("down");
  });
  CHECK_THROWS_AS(paraphrase_schema(earthquake(), {}, client), GenerationFailed);
}

TEST_CASE("oversized prompts shed demonstrations") {
  auto cfg = gen_config();
  std::vector<Sample> demos = corpus_with(3, "eq");
  demos.resize(3);
  for (auto& d : demos) d.query = std::string(400, 'x');
  const std::size_t zero_shot =
      text::code_point_length(render_paraphrase_prompt(earthquake(), {}, default_paraphrase_template()));
  cfg.prompt_char_cap = zero_shot + 450;
  gateway::GenerationClient client(
      cfg, std::make_shared<gateway::ScriptedGenerator>(
               std::map<std::string, std::string>{},
               [&](const std::string& p) -> std::optional<std::string> { return describe_all(p); }));
  const auto p = paraphrase_schema(earthquake(), demos, client);
  CHECK(p.demo_sample_ids.size() == 1);

  cfg.prompt_char_cap = zero_shot - 1;
  gateway::GenerationClient tiny(cfg, std::make_shared<gateway::ScriptedGenerator>());
  CHECK_THROWS_AS(paraphrase_schema(earthquake(), demos, tiny), GenerationFailed);
}

TEST_CASE("build_pool paraphrases every schema deterministically") {
  SchemaPool raw;
  raw.pool_id = "raw";
  for (int i = 0; i < 10; ++i) {
    Schema s = earthquake();
    s.schema_id = "s" + std::to_string(i);
    s.name = "Event" + std::to_string(i);
    raw.schemas[s.schema_id] = s;
  }
  const auto corpus = corpus_with(4, "s3");
  const auto client = responder_client(describe_all, 3);
  const auto a = build_pool(raw, corpus, client, 3, 5);
  const auto b = build_pool(raw, corpus, client, 3, 5);
  CHECK(a.pool.paraphrased.size() == 10);
  CHECK_FALSE(a.report.partial());
  CHECK(a.report.fallbacks.empty());
  CHECK(serialize_pool(a.pool) == serialize_pool(b.pool));
  CHECK(a.pool.paraphrased.at("s3").demo_sample_ids.size() == 3);
  CHECK(a.pool.paraphrased.at("s4").demo_sample_ids.empty());

  const auto zero_shot = build_pool(raw, {}, client);
  for (const auto& [id, p] : zero_shot.pool.paraphrased) CHECK(p.demo_sample_ids.empty());
}

TEST_CASE("build_pool reports generation failures and keeps raw schemas") {
  SchemaPool raw;
  raw.schemas["eq"] = earthquake();
  Schema fl{"fl", "Flood", "", {{"area", ""}}, Language::en, ""};
  raw.schemas["fl"] = fl;
  const auto client = responder_client([](const std::string& p) -> std::optional<std::string> {
    if (p.find("Flood") != std::string::npos) throw TransportError("down");
    return describe_all(p);
  });
  const auto result = build_pool(raw, {}, client);
  REQUIRE(result.report.partial());
  CHECK(result.report.failures.front().first == "fl");
  CHECK(result.pool.paraphrased.at("fl").base == fl);
  CHECK(result.pool.paraphrased.at("fl").warning);
  CHECK_FALSE(result.pool.paraphrased.at("eq").warning);
}

TEST_CASE("translate_schema preserves argument count") {
  const auto zh = responder_client([](const std::string&) -> std::optional<std::string> {
    return R"({"name":"地震","description":"地面震动","arguments":[{"name":"震级","description":""},{"name":"地点","description":""}]})";
  });
  const auto t = translate_schema(earthquake(), Language::zh, zh);
  CHECK_FALSE(t.invariant_breach);
  CHECK(t.schema.schema_id == "eq@zh");
  CHECK(t.schema.language == Language::zh);
  CHECK(t.schema.name == "地震");
  CHECK(t.schema.arguments.size() == 2);
  CHECK(t.schema.arguments[1].name == "地点");

  const auto shrink = responder_client([](const std::string&) -> std::optional<std::string> {
    return R"({"name":"地震","arguments":[{"name":"震级"}]})";
  });
  const auto s = translate_schema(earthquake(), Language::zh, shrink);
  CHECK(s.invariant_breach);
  CHECK(s.schema.arguments == earthquake().arguments);
  CHECK(s.schema.language == Language::zh);

  CHECK_THROWS_AS(translate_schema(earthquake(), Language::en, zh), InvalidArgument);
}

TEST_CASE("schema_document_text formats") {
  CHECK(schema_document_text(earthquake(), DocumentMode::raw) == "Earthquake\nmagnitude; location");
  Schema d = earthquake();
  d.description = "Ground shaking.  ";
  d.arguments[0].description = "Richter value";
  const std::string para = schema_document_text(d, DocumentMode::paraphrased);
  CHECK(para == "Earthquake\nGround shaking.\nmagnitude: Richter value\nlocation");
  CHECK(schema_document_text(d, DocumentMode::raw) == schema_document_text(earthquake(), DocumentMode::raw));
  CHECK(schema_document_text(d, DocumentMode::paraphrased) !=
        schema_document_text(earthquake(), DocumentMode::paraphrased));

  SchemaPool pool;
  pool.schemas["eq"] = earthquake();
  pool.paraphrased["eq"] = ParaphrasedSchema{d, "eq", {}, std::nullopt};
  CHECK(schema_document_text(pool, "eq", DocumentMode::paraphrased) == para);
  CHECK(schema_document_text(pool, "eq", DocumentMode::raw) == "Earthquake\nmagnitude; location");
  CHECK_THROWS_AS(schema_document_text(pool, "nope", DocumentMode::raw), UnresolvableSchema);
}
