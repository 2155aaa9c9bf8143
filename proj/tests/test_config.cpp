#include <sstream>

#include "doctest.h"
#include "kolmo/config.hpp"
#include "kolmo/errors.hpp"

using namespace kolmo;

TEST_SUITE("config") {

TEST_CASE("key=value parsing") {
    std::istringstream is("# comment\n n = 64 \n\nmethod=neural # trailing\nk=4,8\n");
    const auto kv = parse_key_values(is);
    CHECK(kv.at("n") == "64");
    CHECK(kv.at("method") == "neural");
    CHECK(kv.at("k") == "4,8");

    std::istringstream dup("n=1\nn=2\n");
    CHECK_THROWS_AS(parse_key_values(dup), ConfigError);
    std::istringstream bad("just words\n");
    CHECK_THROWS_AS(parse_key_values(bad), ConfigError);
}

TEST_CASE("experiment config") {
    const ExperimentConfig d = ExperimentConfig::from_key_values({});
    CHECK(d.n == 128);
    CHECK(d.method == Method::Vanilla);
    CHECK_NOTHROW(d.validate());

    const auto c = ExperimentConfig::from_key_values({{"n", "64"}, {"method", "pinn"}, {"k", "2,16,32"}, {"sigma", "0,0.05"}});
    CHECK(c.n == 64);
    CHECK(c.method == Method::Pinn);
    CHECK(c.k == std::vector<int>{2, 16, 32});
    CHECK(c.sigma == std::vector<double>{0.0, 0.05});

    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"n", "abc"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"method", "magic"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"n", "63"}}).validate(), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"n", "32"}, {"k", "64"}}).validate(), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"sigma", "-1"}}).validate(), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_key_values({{"method", "neural"}, {"neural_steps", "0"}}).validate(), ConfigError);
}

TEST_CASE("manifest round trip") {
    auto c = ExperimentConfig::from_key_values({{"n", "64"}, {"sigma", "0.25"}, {"nu", "0.02"}, {"method", "hybrid"}});
    const auto kv = c.to_key_values();
    CHECK(kv.size() == ExperimentConfig::keys().size());
    const auto back = ExperimentConfig::from_key_values(kv);
    CHECK(back.to_key_values() == kv);
    CHECK(back.solver.nu == 0.02);
    CHECK(back.method == Method::Hybrid);
}

TEST_CASE("dt resolution") {
    const auto c = ExperimentConfig::from_key_values({{"n", "256"}});
    CHECK(c.resolved_solver().dt == doctest::Approx(0.05 / 29));
    const auto fixed = ExperimentConfig::from_key_values({{"n", "256"}, {"dt", "1.25e-3"}});
    CHECK(fixed.resolved_solver().dt == 1.25e-3);
}

}
