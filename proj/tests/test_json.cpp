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

#include "asee/errors.hpp"
#include "asee/json_io.hpp"
#include "asee/json_reply.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace asee;
using asee::testing::TempDir;

namespace {

Schema attack() {
  return Schema{"s1", "Attack", "", {{"attacker", "who"}, {"target", ""}}, Language::en, "ace"};
}

}  // namespace

TEST_CASE("samples round-trip through JSONL") {
  TempDir dir;
  Sample a{"a", "query one", Language::en, {{"s1", {{{"attacker", {"x", "y"}}}}}}, "ace", Split::train};
  Sample b{"b", "问题", Language::zh, {}, "", Split::unassigned};
  io::save_samples(dir.file("s.jsonl"), {a, b});
  const auto loaded = io::load_samples(dir.file("s.jsonl"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == a);
  CHECK(loaded[1] == b);
}

TEST_CASE("read_jsonl reports the failing line") {
  TempDir dir;
  asee::testing::spit(dir.file("bad.jsonl"), "{\"sample_id\":\"a\",\"query\":\"q\"}\n\n{oops\n");
  try {
    io::load_samples(dir.file("bad.jsonl"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(io::load_samples(dir.file("missing.jsonl")), IoError);
}

TEST_CASE("duplicate sample ids are rejected") {
  TempDir dir;
  asee::testing::spit(dir.file("d.jsonl"),
                      "{\"sample_id\":\"a\",\"query\":\"q\"}\n{\"sample_id\":\"a\",\"query\":\"r\"}\n");
  CHECK_THROWS_AS(io::load_samples(dir.file("d.jsonl")), DuplicateId);
}

TEST_CASE("event values are coerced to string lists") {
  const auto e = io::event_from_json(io::Json::parse(R"({"a":"x","b":[1,null,"y"],"c":null,"d":[]})"));
  CHECK(e == ArgumentValueMap{{"a", {"x"}}, {"b", {"1", "y"}}});
}

TEST_CASE("canonical_events follows declaration order") {
  const auto j = io::canonical_events(attack(), {{{"target", {"t"}}, {"attacker", {"a"}}, {"zz", {"u"}}}});
  CHECK(j.dump() == R"([{"attacker":["a"],"target":["t"],"zz":["u"]}])");
}

TEST_CASE("schema parsing validates arguments") {
  CHECK_THROWS_AS(io::schema_from_json(io::Json::parse(R"({"schema_id":"x","name":"n","arguments":[]})"), 4),
                  ParseError);
  CHECK_THROWS_AS(io::schema_from_json(
                      io::Json::parse(R"({"schema_id":"x","name":"n","arguments":["a","a"]})")),
                  ParseError);
  const Schema s = io::schema_from_json(io::Json::parse(
      R"({"schema_id":"x","name":"n","arguments":["a",{"name":"b","description":"d"}]})"));
  CHECK(s.arguments == std::vector<Argument>{{"a", ""}, {"b", "d"}});
}

TEST_CASE("locate_json prefers fenced blocks") {
  const auto r = reply::locate_json("intro {\"x\":1}\n```json\n{\"y\":2}\n```\n");
  REQUIRE(r);
  CHECK(r->fenced);
  CHECK(r->value == io::Json::parse(R"({"y":2})"));
  CHECK_FALSE(r->repaired());
}

TEST_CASE("locate_json accepts a bare JSON reply") {
  const auto r = reply::locate_json("  [1, 2]  ");
  REQUIRE(r);
  CHECK(r->value.size() == 2);
  CHECK_FALSE(r->repaired());
}

TEST_CASE("locate_json cuts balanced JSON out of prose") {
  const auto r = reply::locate_json("Sure! Here it is: {\"a\": \"}{\", \"b\": [1,]} hope that helps");
  REQUIRE(r);
  CHECK(r->from_prose);
  CHECK(r->commas_repaired);
  CHECK(r->value["a"] == "}{");
}

TEST_CASE("locate_json gives up on text without JSON") {
  CHECK_FALSE(reply::locate_json("no events found"));
  CHECK_FALSE(reply::locate_json(""));
  CHECK_FALSE(reply::locate_json("{ unterminated"));
}

TEST_CASE("strip_trailing_commas ignores commas in strings") {
  CHECK(reply::strip_trailing_commas(R"({"a":[1,2,],"b":",]",})") == R"({"a":[1,2],"b":",]"})");
}
