#include <doctest.h>

#include "mvlab/config.hpp"

#include <json.hpp>

using namespace mvlab;
using nlohmann::json;

namespace {

json base_doc() {
  return json::parse(R"({
    "version": 1,
    "seed": 7,
    "dim": 1,
    "model": {"family": "cubic_interaction",
              "params": {"c1": 1, "c2": 1, "c3": 0.1, "c4": 1, "f_uses_measure": false}},
    "levy": {"split_radius": 1.0,
             "small": {"rate": 1.0, "sampler": {"family": "sphere", "radius": 0.1}},
             "big": {"rate": 0.5, "sampler": {"family": "annulus", "inner": 1.5, "outer": 2.0}}},
    "initial": {"family": "uniform_box", "lo": -1, "hi": 1},
    "solver": {"T": 1.0, "h": 0.01, "m": 64},
    "experiment": {"n_grid": [8, 16, 32], "replications": 10, "p": 1.0}
  })");
}

std::vector<std::string> violations_of(const json& doc, std::optional<Subcommand> sub = std::nullopt) {
  try {
    parse_config(doc.dump(), sub);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("minimal configuration parses") {
  const auto cfg = parse_config(base_doc().dump(), Subcommand::kPoc);
  CHECK(cfg.seed == 7);
  CHECK(cfg.dim == 1);
  CHECK(cfg.levy.small.rate == 1.0);
  CHECK(cfg.levy.small_second_moment() == doctest::Approx(0.01));
  CHECK(cfg.solver.paths == 64);
  CHECK(cfg.experiment.n_grid == std::vector<std::size_t>{8, 16, 32});
  CHECK(cfg.beta() == 2.0);
  CHECK(cfg.warnings.empty());
  const auto pc = cfg.poc_config(1);
  CHECK(pc.p == 1.0);
  CHECK(pc.replications == 10);
  CHECK(cfg.grid().base.size() == 101);
  CHECK_FALSE(cfg.coefficients().small_jump_uses_measure);
}

TEST_CASE("p equal to beta is rejected") {
  auto doc = base_doc();
  doc["experiment"]["p"] = 2.0;
  const auto v = violations_of(doc, Subcommand::kPoc);
  REQUIRE_FALSE(v.empty());
  CHECK(mentions(v, "p<beta required"));
}

TEST_CASE("every violation is reported at once") {
  auto doc = base_doc();
  doc["experiment"]["p"] = 2.0;
  doc["experiment"]["q1"] = 0.95;
  doc["solver"]["h"] = -0.1;
  doc["solver"]["m"] = 1;
  doc["dim"] = 0;
  const auto v = violations_of(doc);
  CHECK(mentions(v, "p<beta required"));
  CHECK(mentions(v, "q1<q2<1 required"));
  CHECK(mentions(v, "h>0 required"));
  CHECK(mentions(v, "m>=2 required"));
  CHECK(mentions(v, "config.dim"));
  CHECK(v.size() >= 5);
}

TEST_CASE("missing blocks and wrong types") {
  auto doc = base_doc();
  doc.erase("levy");
  doc["solver"]["T"] = "one";
  const auto v = violations_of(doc);
  CHECK(mentions(v, "config.levy: missing required field"));
  CHECK(mentions(v, "solver.T: wrong type"));
  auto beta = base_doc();
  beta["model"]["params"]["beta"] = "two";
  CHECK(mentions(violations_of(beta, Subcommand::kPoc), "model.params.beta: wrong type"));
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
}

TEST_CASE("subcommand preconditions") {
  auto doc = base_doc();
  doc["experiment"]["n_grid"] = {8, 16};
  doc["experiment"]["reference_factor"] = 2;
  auto v = violations_of(doc, Subcommand::kPoc);
  CHECK(mentions(v, "n_grid"));
  CHECK(mentions(v, "reference_factor"));
  CHECK(violations_of(doc, Subcommand::kSimulate).empty());

  auto measure_f = base_doc();
  measure_f["model"]["params"]["f_uses_measure"] = true;
  CHECK(mentions(violations_of(measure_f, Subcommand::kPoc), "independent of the measure"));
  CHECK(mentions(violations_of(base_doc(), Subcommand::kCommonNoise), "common_levy"));

  auto checks = base_doc();
  checks["experiment"]["forms"] = {"A1", "A9", "B1"};
  checks["experiment"]["declared"] = {{"A1", 5.0}};
  v = violations_of(checks, Subcommand::kCheckAssumptions);
  CHECK(mentions(v, "unknown assumption 'A9'"));
  CHECK(mentions(v, "missing constant for B1"));
  CHECK(mentions(v, "required for B1"));
}

TEST_CASE("Levy model violations surface through the config") {
  auto doc = base_doc();
  doc["levy"]["small"]["sampler"]["radius"] = 1.5;  // outside the split radius
  doc["levy"]["big"]["rate"] = -1.0;
  const auto v = violations_of(doc);
  CHECK(mentions(v, "small-band marks"));
  CHECK(v.size() >= 2);
}

TEST_CASE("cubic coefficients below the C2 threshold produce a warning") {
  auto doc = base_doc();
  doc["model"]["params"]["c2"] = 0.01;
  doc["model"]["params"]["c3"] = 1.0;
  const auto cfg = parse_config(doc.dump());
  REQUIRE(cfg.warnings.size() == 1);
  CHECK(cfg.warnings[0].find("cubic_interaction") != std::string::npos);
}

TEST_CASE("canonical form and hash") {
  const auto a = parse_config(base_doc().dump());
  // Key order and whitespace do not matter.
  const auto b = parse_config(json::parse(base_doc().dump(4)).dump(2));
  CHECK(canonical_json(a) == canonical_json(b));
  CHECK(config_hash(a) == config_hash(b));
  auto doc = base_doc();
  doc["seed"] = 8;
  CHECK(config_hash(parse_config(doc.dump())) != config_hash(a));
  auto noseed = base_doc();
  noseed.erase("seed");
  const auto c = parse_config(noseed.dump());
  CHECK(c.seed == 1);
  CHECK(c.source.at("seed") == 1);
}

TEST_CASE("subcommand names round-trip") {
  for (const char* s : {"simulate", "picard", "poc", "strong-poc", "moments", "common-noise",
                        "wasserstein-selftest", "check-assumptions"}) {
    const auto sub = parse_subcommand(s);
    REQUIRE(sub.has_value());
    CHECK(std::string(subcommand_name(*sub)) == s);
  }
  CHECK_FALSE(parse_subcommand("unknown").has_value());
}

TEST_CASE("mutated configurations either parse or raise ConfigError") {
  RandomStream rng(77, {});
  const json base = base_doc();
  const std::vector<json> junk{json(), json(-3), json(0), json("x"), json(2.5), json(0.5), json::array(), json::object(),
                               json(1e308), json(true)};
  int rejected = 0;
  for (int t = 0; t < 400; ++t) {
    json doc = base;
    const int edits = 1 + static_cast<int>(rng.uniform() * 3);
    for (int e = 0; e < edits; ++e) {
      std::vector<json::json_pointer> leaves;
      const json flat = doc.flatten();
      for (auto it = flat.begin(); it != flat.end(); ++it) leaves.emplace_back(it.key());
      if (leaves.empty()) break;
      const auto& ptr = leaves[static_cast<std::size_t>(rng.uniform() * leaves.size())];
      const auto& value = junk[static_cast<std::size_t>(rng.uniform() * junk.size())];
      auto& parent = doc.at(ptr.parent_pointer());
      if (rng.uniform() < 0.3 && parent.is_object()) {
        parent.erase(ptr.back());
      } else {
        doc[ptr] = value;
      }
    }
    try {
      const auto cfg = parse_config(doc.dump(), Subcommand::kPoc);
      // Accepted configs build every derived object.
      CHECK_NOTHROW(cfg.coefficients());
      CHECK_NOTHROW(cfg.poc_config(1).validate(cfg.beta(), false));
      RandomStream draw(1, {});
      CHECK(cfg.initial_law().draw(draw).size() == cfg.dim);
    } catch (const ConfigError& e) {
      CHECK_FALSE(e.violations().empty());
      ++rejected;
    }
  }
  CHECK(rejected > 200);
  // Truncated text never gets past the JSON parser.
  const std::string text = base.dump();
  for (std::size_t cut = 0; cut < text.size(); cut += 7) {
    CHECK_THROWS_AS(parse_config(text.substr(0, cut)), ConfigError);
  }
}
